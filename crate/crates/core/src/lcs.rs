//! Strength-guided hill climbing over rule strings.
//!
//! Every `(step, rule)` pair carries a positive strength. The climber picks a
//! step uniformly, spins a roulette wheel over that step's strengths to pick a
//! replacement rule, and keeps the change only if the decoded schedule is
//! strictly better. Accepted strings have their rules reinforced; unused
//! entries are never touched, and strengths never decay within a run.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{decode, RuleId, RuleString, RULE_COUNT};
use crate::error::{Error, Result};
use crate::problem::{Fitness, Instance, Schedule};
use crate::rng::{child_seed, stream};

pub const DEFAULT_INITIAL_STRENGTH: f64 = 1.0;
pub const DEFAULT_STRENGTH_CAP: f64 = 1000.0;

/// Draws an index with probability proportional to its weight.
///
/// Draws `u` uniformly from `[0, sum)` and returns the first index whose
/// cumulative weight exceeds it. Exactly one value is drawn from `rng`.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidWeights);
    }
    let u = rng.gen::<f64>() * total;
    let mut cumulative = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cumulative += w;
        if cumulative > u {
            return Ok(i);
        }
    }
    // rounding left u at or past the final partial sum
    Ok(weights.iter().rposition(|&w| w > 0.0).expect("positive total"))
}

/// Per-step rule strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthTable {
    strengths: Vec<Vec<f64>>,
    initial: f64,
    cap: f64,
}

impl StrengthTable {
    /// A table with every entry set to `initial`.
    pub fn new(n_steps: usize, k: usize, initial: f64, cap: f64) -> Result<Self> {
        if !(initial > 0.0) || !initial.is_finite() {
            return Err(Error::config("initial_strength", "must be positive"));
        }
        if !(cap >= initial) || !cap.is_finite() {
            return Err(Error::config("strength_cap", "must be at least the initial strength"));
        }
        if k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        Ok(Self {
            strengths: vec![vec![initial; k]; n_steps],
            initial,
            cap,
        })
    }

    pub fn with_defaults(n_steps: usize) -> Self {
        Self::new(n_steps, RULE_COUNT, DEFAULT_INITIAL_STRENGTH, DEFAULT_STRENGTH_CAP)
            .expect("default strengths are valid")
    }

    /// Builds a table from explicit rows. Every entry must lie in `(0, cap]`.
    pub fn from_rows(strengths: Vec<Vec<f64>>, cap: f64) -> Result<Self> {
        let k = strengths.first().map_or(0, Vec::len);
        for (i, row) in strengths.iter().enumerate() {
            if row.len() != k || k == 0 {
                return Err(Error::config(format!("strengths[{i}]"), "rows must share a positive length"));
            }
            if row.iter().any(|&s| !(s > 0.0) || s > cap) {
                return Err(Error::config(format!("strengths[{i}]"), "entries must lie in (0, cap]"));
            }
        }
        Ok(Self {
            strengths,
            initial: DEFAULT_INITIAL_STRENGTH,
            cap,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.strengths.len()
    }

    pub fn k(&self) -> usize {
        self.strengths.first().map_or(0, Vec::len)
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn row(&self, step: usize) -> &[f64] {
        &self.strengths[step]
    }

    pub fn get(&self, step: usize, rule: usize) -> f64 {
        self.strengths[step][rule]
    }

    /// Raises `s[i][used_i]` by `delta` (capped) for every step `i`. All other
    /// entries are left untouched.
    pub fn reinforce(&mut self, used: &RuleString, delta: f64) -> Result<()> {
        if used.len() != self.n_steps() {
            return Err(Error::RuleStringLength {
                expected: self.n_steps(),
                got: used.len(),
            });
        }
        if !(delta >= 0.0) {
            return Err(Error::config("delta", "must be non-negative"));
        }
        for (row, rule) in self.strengths.iter_mut().zip(used.steps()) {
            let s = &mut row[rule.index()];
            *s = (*s + delta).min(self.cap);
        }
        Ok(())
    }

    /// Plain-text dump, one line per step.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.strengths.iter().enumerate() {
            let _ = write!(out, "step {i}:");
            for s in row {
                let _ = write!(out, " {s}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HcConfig {
    /// Number of proposals.
    pub iterations: usize,
    /// Reinforcement added to each used rule on acceptance.
    pub delta: f64,
}

impl Default for HcConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            delta: 0.1,
        }
    }
}

impl HcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::config("delta", "must be a finite non-negative number"));
        }
        Ok(())
    }
}

/// A decoded rule string together with the seed of the stream it was decoded
/// with, so the fitness can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub rules: RuleString,
    pub schedule: Schedule,
    pub fitness: Fitness,
    pub decode_seed: u64,
}

impl Decoded {
    pub fn new(instance: &Instance, rules: RuleString, decode_seed: u64) -> Result<Self> {
        let (schedule, fitness) = decode(instance, &rules, &mut stream(decode_seed))?;
        Ok(Self {
            rules,
            schedule,
            fitness,
            decode_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimbOutcome {
    pub best: Decoded,
    /// Decodes performed, including the start decode for [`hill_climb`].
    pub evaluations: u64,
    /// Totals of the start and of every accepted move, in order.
    pub trajectory: Vec<f64>,
}

impl ClimbOutcome {
    pub fn accepted_moves(&self) -> usize {
        self.trajectory.len() - 1
    }
}

/// Decodes `start` and climbs from it.
pub fn hill_climb<R: Rng + ?Sized>(
    instance: &Instance,
    start: &RuleString,
    table: &mut StrengthTable,
    config: &HcConfig,
    rng: &mut R,
) -> Result<ClimbOutcome> {
    let start = Decoded::new(instance, start.clone(), child_seed(rng))?;
    let mut outcome = hill_climb_from(instance, start, table, config, rng)?;
    outcome.evaluations += 1;
    Ok(outcome)
}

/// Climbs from an already decoded start.
///
/// Each iteration draws, in order, a step index, a roulette value and a
/// decode seed, so the number of draws is always `3 * iterations`. Drawing the
/// current rule spends the iteration without decoding.
pub fn hill_climb_from<R: Rng + ?Sized>(
    instance: &Instance,
    start: Decoded,
    table: &mut StrengthTable,
    config: &HcConfig,
    rng: &mut R,
) -> Result<ClimbOutcome> {
    config.validate()?;
    let n = instance.nurse_count();
    if start.rules.len() != n {
        return Err(Error::RuleStringLength {
            expected: n,
            got: start.rules.len(),
        });
    }
    if table.n_steps() != n {
        return Err(Error::RuleStringLength {
            expected: table.n_steps(),
            got: n,
        });
    }

    let mut current = start;
    let mut evaluations = 0;
    let mut trajectory = vec![current.fitness.total];
    if n == 0 {
        return Ok(ClimbOutcome {
            best: current,
            evaluations,
            trajectory,
        });
    }

    for _ in 0..config.iterations {
        let step = rng.gen_range(0..n);
        let rule = roulette(table.row(step), rng)?;
        let seed = child_seed(rng);
        let rule = RuleId::new(rule)?;
        if current.rules.steps()[step] == rule {
            continue;
        }
        let mut proposal = current.rules.clone();
        proposal.steps_mut()[step] = rule;
        let candidate = Decoded::new(instance, proposal, seed)?;
        evaluations += 1;
        if candidate.fitness.total < current.fitness.total {
            current = candidate;
            trajectory.push(current.fitness.total);
            table.reinforce(&current.rules, config.delta)?;
        }
    }

    Ok(ClimbOutcome {
        best: current,
        evaluations,
        trajectory,
    })
}
