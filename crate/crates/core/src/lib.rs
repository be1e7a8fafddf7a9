//! Schedule construction by per-step rule strings, searched with a chain
//! Bayesian-network model-building algorithm and a strength-guided hill
//! climber.
//!
//! The pipeline, bottom-up:
//!
//! - [`problem`]: instances, fitness, generators and the brute-force oracle.
//! - [`construction`]: the four construction rules and the decoder.
//! - [`boa`]: counting-based model fitting, forward sampling and the
//!   generational loop.
//! - [`lcs`]: strength table, roulette selection and hill climbing.
//! - [`harness`]: baselines, experiments and report files.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boa;
pub mod construction;
pub mod error;
pub mod harness;
pub mod lcs;
pub mod problem;
pub mod rng;

pub use boa::{
    evolve, learn_cpts, replace_population, sample_string, BoaConfig, BoaModel, GenerationRecord,
    Individual, RunReport, StopReason,
};
pub use construction::{apply_rule, decode, PartialState, RuleId, RuleString, RULE_COUNT};
pub use error::{Error, Result};
pub use harness::{run_experiment, solve, Algorithm, ComparisonRow, ExperimentConfig, Outcome};
pub use lcs::{hill_climb, roulette, HcConfig, StrengthTable};
pub use problem::{
    enumerate_optimum, evaluate, generate, generate_instance, parse_instance, Fitness, GenConfig,
    GenMode, Instance, Pattern, Schedule,
};
