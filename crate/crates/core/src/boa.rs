//! Chain Bayesian-network model building over rule strings.
//!
//! The network structure is fixed: step `i` depends only on step `i - 1`. With
//! structure known and every variable observed, fitting the model reduces to
//! counting rule frequencies in the elite, optionally with additive smoothing.
//! New strings are drawn by forward sampling from step 0.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{RuleId, RuleString, RULE_COUNT};
use crate::error::{Error, Result};
use crate::lcs::{
    hill_climb_from, roulette, Decoded, HcConfig, StrengthTable, DEFAULT_INITIAL_STRENGTH,
    DEFAULT_STRENGTH_CAP,
};
use crate::problem::{Fitness, Instance, Schedule};
use crate::rng::{child_seed, stream};

const ROW_TOLERANCE: f64 = 1e-9;

/// Chain network: a marginal for step 0 and a `k x k` transition table
/// `T[prev][next]` for each later step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoaModel {
    n_steps: usize,
    k: usize,
    marginal: Vec<f64>,
    /// `transitions[i - 1]` is the table for step `i`.
    transitions: Vec<Vec<Vec<f64>>>,
}

impl BoaModel {
    pub fn uniform(n_steps: usize, k: usize) -> Self {
        let row = vec![1.0 / k as f64; k];
        Self {
            n_steps,
            k,
            marginal: row.clone(),
            transitions: vec![vec![row; k]; n_steps.saturating_sub(1)],
        }
    }

    /// A model that puts all mass on `rules`.
    pub fn degenerate(rules: &RuleString, k: usize) -> Self {
        let one_hot = |r: RuleId| {
            let mut row = vec![0.0; k];
            row[r.index()] = 1.0;
            row
        };
        let steps = rules.steps();
        Self {
            n_steps: steps.len(),
            k,
            marginal: steps.first().map_or_else(|| vec![1.0 / k as f64; k], |&r| one_hot(r)),
            transitions: steps[1.min(steps.len())..]
                .iter()
                .map(|&r| vec![one_hot(r); k])
                .collect(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    /// Distribution of step `step` (>= 1) given the rule at `step - 1`.
    pub fn transition(&self, step: usize, prev: usize) -> &[f64] {
        &self.transitions[step - 1][prev]
    }

    /// Checks that every distribution is non-negative and sums to 1 within 1e-9.
    pub fn check(&self) -> Result<()> {
        let ok = |row: &[f64]| {
            row.len() == self.k
                && row.iter().all(|&p| p >= 0.0)
                && (row.iter().sum::<f64>() - 1.0).abs() <= ROW_TOLERANCE
        };
        if self.n_steps > 0 && !ok(&self.marginal) {
            return Err(Error::config("marginal", "not a probability vector"));
        }
        for (i, table) in self.transitions.iter().enumerate() {
            for (prev, row) in table.iter().enumerate() {
                if !ok(row) {
                    return Err(Error::config(
                        format!("transitions[{}][{prev}]", i + 1),
                        "not a probability vector",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RuleString {
        sample_string(self, rng)
    }
}

/// Fits the chain model to `elite` by frequency counting with additive
/// smoothing `alpha`.
///
/// A parent value that never occurs in the elite gets a uniform row when
/// `alpha` is zero; such rows are unreachable by forward sampling.
pub fn learn_cpts(elite: &[RuleString], n_steps: usize, k: usize, alpha: f64) -> Result<BoaModel> {
    if k == 0 || k > RULE_COUNT {
        return Err(Error::config("k", format!("must be in 1..={RULE_COUNT}")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::config("smoothing", "must be a finite non-negative number"));
    }
    if elite.is_empty() && alpha == 0.0 {
        return Err(Error::EmptyElite);
    }
    for x in elite {
        if x.len() != n_steps {
            return Err(Error::RuleStringLength {
                expected: n_steps,
                got: x.len(),
            });
        }
        if let Some(r) = x.steps().iter().find(|r| r.index() >= k) {
            return Err(Error::RuleOutOfRange(r.index()));
        }
    }

    let normalize = |counts: &[u64]| -> Vec<f64> {
        let total: u64 = counts.iter().sum();
        let denom = total as f64 + k as f64 * alpha;
        if denom == 0.0 {
            vec![1.0 / k as f64; k]
        } else {
            counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
        }
    };

    let mut first = vec![0u64; k];
    let mut pairs = vec![vec![vec![0u64; k]; k]; n_steps.saturating_sub(1)];
    for x in elite {
        let steps = x.steps();
        if let Some(r) = steps.first() {
            first[r.index()] += 1;
        }
        for (i, w) in steps.windows(2).enumerate() {
            pairs[i][w[0].index()][w[1].index()] += 1;
        }
    }

    Ok(BoaModel {
        n_steps,
        k,
        marginal: normalize(&first),
        transitions: pairs
            .iter()
            .map(|table| table.iter().map(|row| normalize(row)).collect())
            .collect(),
    })
}

/// Forward-samples one string: step 0 from the marginal, then each step from
/// the row selected by its predecessor. One draw per step.
pub fn sample_string<R: Rng + ?Sized>(model: &BoaModel, rng: &mut R) -> RuleString {
    let mut steps = Vec::with_capacity(model.n_steps);
    for i in 0..model.n_steps {
        let dist = match steps.last() {
            None => &model.marginal[..],
            Some(&prev) => model.transition(i, usize::from(prev)),
        };
        let r = roulette(dist, rng).expect("model rows are probability vectors");
        steps.push(r as u8);
    }
    RuleString::new(steps.into_iter().map(|r| RuleId::try_from(r).expect("k <= RULE_COUNT")).collect())
}

/// A decoded member of the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genotype: RuleString,
    pub schedule: Schedule,
    pub fitness: Fitness,
    pub birth_generation: u32,
    /// Seed of the stream the genotype was decoded with.
    pub decode_seed: u64,
}

impl From<Decoded> for Individual {
    fn from(d: Decoded) -> Self {
        Individual::from_decoded(d, 0)
    }
}

impl Individual {
    pub fn from_decoded(d: Decoded, birth_generation: u32) -> Self {
        Self {
            genotype: d.rules,
            schedule: d.schedule,
            fitness: d.fitness,
            birth_generation,
            decode_seed: d.decode_seed,
        }
    }

    pub fn to_decoded(&self) -> Decoded {
        Decoded {
            rules: self.genotype.clone(),
            schedule: self.schedule.clone(),
            fitness: self.fitness,
            decode_seed: self.decode_seed,
        }
    }
}

/// Population order: lower total, then older, then smaller genotype.
pub fn rank(a: &Individual, b: &Individual) -> Ordering {
    a.fitness
        .total
        .total_cmp(&b.fitness.total)
        .then(a.birth_generation.cmp(&b.birth_generation))
        .then_with(|| a.genotype.cmp(&b.genotype))
}

/// Truncation replacement over the merged population and offspring.
pub fn replace_population(
    population: Vec<Individual>,
    offspring: Vec<Individual>,
    size: usize,
) -> Vec<Individual> {
    let mut merged = population;
    merged.extend(offspring);
    merged.sort_by(rank);
    merged.truncate(size);
    merged
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoaConfig {
    pub population_size: usize,
    pub elite_fraction: f64,
    /// Offspring per generation; `None` means half the population.
    pub offspring_count: Option<usize>,
    pub smoothing: f64,
    pub max_generations: u32,
    /// Generations without strict improvement before stopping; 0 disables.
    pub stagnation_limit: u32,
    /// Stop before a generation whose worst-case decode count would exceed this.
    pub max_evaluations: Option<u64>,
    pub lcs_enabled: bool,
    pub hill_climb: HcConfig,
    pub initial_strength: f64,
    pub strength_cap: f64,
    pub seed: u64,
}

impl Default for BoaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            elite_fraction: 0.5,
            offspring_count: None,
            smoothing: 1.0,
            max_generations: 200,
            stagnation_limit: 50,
            max_evaluations: None,
            lcs_enabled: false,
            hill_climb: HcConfig::default(),
            initial_strength: DEFAULT_INITIAL_STRENGTH,
            strength_cap: DEFAULT_STRENGTH_CAP,
            seed: 0,
        }
    }
}

impl BoaConfig {
    pub fn offspring(&self) -> usize {
        self.offspring_count.unwrap_or(self.population_size / 2)
    }

    pub fn elite_size(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize)
            .clamp(1, self.population_size)
    }

    /// Upper bound on decodes spent by one generation.
    pub fn evaluations_per_generation(&self) -> u64 {
        let climb = if self.lcs_enabled {
            self.hill_climb.iterations as u64
        } else {
            0
        };
        self.offspring() as u64 + climb
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::config("population_size", "must be at least 1"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::config("elite_fraction", "must lie in (0, 1]"));
        }
        if self.offspring() == 0 {
            return Err(Error::config("offspring_count", "must be at least 1"));
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return Err(Error::config("smoothing", "must be a finite non-negative number"));
        }
        if let Some(cap) = self.max_evaluations {
            if cap < self.population_size as u64 {
                return Err(Error::config(
                    "max_evaluations",
                    format!("budget {cap} is below the population size {}", self.population_size),
                ));
            }
        }
        self.hill_climb.validate()?;
        if self.lcs_enabled {
            StrengthTable::new(1, RULE_COUNT, self.initial_strength, self.strength_cap)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxGenerations,
    Stagnation,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Generation 0 is the initial population.
    pub records: Vec<GenerationRecord>,
    pub best: Individual,
    pub config: BoaConfig,
    pub seed: u64,
    pub stop_reason: StopReason,
    pub strengths: Option<StrengthTable>,
}

impl RunReport {
    pub fn evaluations(&self) -> u64 {
        self.records.last().map_or(0, |r| r.evaluations)
    }

    pub fn generations(&self) -> u32 {
        self.records.last().map_or(0, |r| r.generation)
    }
}

fn decode_all(
    instance: &Instance,
    genotypes: Vec<RuleString>,
    seeds: Vec<u64>,
    generation: u32,
) -> Result<Vec<Individual>> {
    genotypes
        .into_par_iter()
        .zip(seeds)
        .map(|(g, seed)| Decoded::new(instance, g, seed).map(|d| Individual::from_decoded(d, generation)))
        .collect()
}

fn record(generation: u32, population: &[Individual], evaluations: u64) -> GenerationRecord {
    let mean = population.iter().map(|i| i.fitness.total).sum::<f64>() / population.len() as f64;
    GenerationRecord {
        generation,
        best_fitness: population[0].fitness.total,
        mean_fitness: mean,
        evaluations,
    }
}

/// Runs the model-building loop.
///
/// All randomness comes from one master stream seeded with `config.seed`,
/// consumed in this order: the initial strings, one decode seed per initial
/// string; then per generation the offspring strings in order, one decode
/// seed per offspring, and (with LCS enabled) one hill-climb seed. Decoding
/// runs in parallel on those pre-drawn seeds, so the report does not depend
/// on thread scheduling.
pub fn evolve(instance: &Instance, config: &BoaConfig) -> Result<RunReport> {
    config.validate()?;
    let n = instance.nurse_count();
    let size = config.population_size;
    let offspring_count = config.offspring();
    let mut master = stream(config.seed);

    let initial: Vec<RuleString> = (0..size).map(|_| RuleString::random(n, &mut master)).collect();
    let seeds: Vec<u64> = (0..size).map(|_| child_seed(&mut master)).collect();
    let mut population = decode_all(instance, initial, seeds, 0)?;
    population.sort_by(rank);
    let mut evaluations = size as u64;
    let mut records = vec![record(0, &population, evaluations)];

    let mut table = if config.lcs_enabled {
        Some(StrengthTable::new(
            n,
            RULE_COUNT,
            config.initial_strength,
            config.strength_cap,
        )?)
    } else {
        None
    };

    let mut best_total = population[0].fitness.total;
    let mut stagnant = 0u32;
    let mut stop_reason = StopReason::MaxGenerations;

    for generation in 1..=config.max_generations {
        if let Some(cap) = config.max_evaluations {
            if evaluations + config.evaluations_per_generation() > cap {
                stop_reason = StopReason::Budget;
                break;
            }
        }

        let elite: Vec<RuleString> = population[..config.elite_size()]
            .iter()
            .map(|i| i.genotype.clone())
            .collect();
        let model = learn_cpts(&elite, n, RULE_COUNT, config.smoothing)?;

        let genotypes: Vec<RuleString> =
            (0..offspring_count).map(|_| model.sample(&mut master)).collect();
        let seeds: Vec<u64> = (0..offspring_count).map(|_| child_seed(&mut master)).collect();
        let mut offspring = decode_all(instance, genotypes, seeds, generation)?;
        evaluations += offspring_count as u64;

        if let Some(table) = table.as_mut() {
            let mut climb_rng = stream(child_seed(&mut master));
            let top = (0..offspring.len())
                .min_by(|&a, &b| rank(&offspring[a], &offspring[b]))
                .expect("at least one offspring");
            let outcome = hill_climb_from(
                instance,
                offspring[top].to_decoded(),
                table,
                &config.hill_climb,
                &mut climb_rng,
            )?;
            evaluations += outcome.evaluations;
            offspring[top] = Individual::from_decoded(outcome.best, generation);
            let gen_best = offspring
                .iter()
                .min_by(|a, b| rank(a, b))
                .expect("at least one offspring");
            table.reinforce(&gen_best.genotype, config.hill_climb.delta)?;
        }

        population = replace_population(population, offspring, size);
        records.push(record(generation, &population, evaluations));

        let current = population[0].fitness.total;
        if current < best_total {
            best_total = current;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if config.stagnation_limit > 0 && stagnant >= config.stagnation_limit {
            stop_reason = StopReason::Stagnation;
            break;
        }
    }

    Ok(RunReport {
        records,
        best: population.swap_remove(0),
        config: config.clone(),
        seed: config.seed,
        stop_reason,
        strengths: table,
    })
}
