//! Experiment orchestration, baselines and CSV/JSON output.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boa::{evolve, rank, BoaConfig, GenerationRecord, Individual, StopReason};
use crate::construction::{RuleId, RuleString};
use crate::error::{Error, Result};
use crate::lcs::{Decoded, StrengthTable};
use crate::problem::{generate_instance, GenConfig, GenMode, Instance};
use crate::rng::{child_seed, stream};

pub const REPORT_HEADER: &str = "generation,best_fitness,mean_fitness,evaluations";
pub const COMPARISON_HEADER: &str = "instance,algorithm,seed,best_fitness,evaluations,wall_time_ms";

/// Decodes per report row for the sampling baselines.
const BASELINE_BLOCK: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Boa,
    BoaLcs,
    /// Best of `budget` uniform random rule strings.
    Random,
    /// The constant string of one rule.
    Fixed(RuleId),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Boa => f.write_str("boa"),
            Algorithm::BoaLcs => f.write_str("boa+lcs"),
            Algorithm::Random => f.write_str("random"),
            Algorithm::Fixed(r) => write!(f, "fixed:{r}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boa" => Ok(Algorithm::Boa),
            "boa+lcs" => Ok(Algorithm::BoaLcs),
            "random" => Ok(Algorithm::Random),
            _ => s
                .strip_prefix("fixed:")
                .and_then(|r| r.parse::<usize>().ok())
                .and_then(|r| RuleId::new(r).ok())
                .map(Algorithm::Fixed)
                .ok_or_else(|| Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Algorithm {
    fn is_boa(self) -> bool {
        matches!(self, Algorithm::Boa | Algorithm::BoaLcs)
    }

    /// Whether the algorithm needs an evaluation budget to be meaningful.
    pub fn needs_budget(self) -> bool {
        matches!(self, Algorithm::Random | Algorithm::Fixed(RuleId::RANDOM_CHEAPEST))
    }
}

/// Result of one solver run, independent of the algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub budget: Option<u64>,
    pub records: Vec<GenerationRecord>,
    pub best: Individual,
    pub stop_reason: Option<StopReason>,
    pub config: Option<BoaConfig>,
    pub strengths: Option<StrengthTable>,
}

impl Outcome {
    pub fn evaluations(&self) -> u64 {
        self.records.last().map_or(0, |r| r.evaluations)
    }
}

/// Runs `algorithm` on `instance`.
///
/// BOA variants start from `base` with the seed and LCS flag overridden and
/// the budget, when given, as an evaluation cap. `random` and `fixed:3` use
/// exactly `budget` decodes; `fixed:0..=2` decode once.
pub fn solve(
    instance: &Instance,
    algorithm: Algorithm,
    seed: u64,
    budget: Option<u64>,
    base: &BoaConfig,
) -> Result<Outcome> {
    match algorithm {
        Algorithm::Boa | Algorithm::BoaLcs => {
            let config = BoaConfig {
                seed,
                lcs_enabled: algorithm == Algorithm::BoaLcs,
                max_evaluations: budget.or(base.max_evaluations),
                ..base.clone()
            };
            let report = evolve(instance, &config)?;
            Ok(Outcome {
                algorithm,
                seed,
                budget,
                records: report.records,
                best: report.best,
                stop_reason: Some(report.stop_reason),
                config: Some(report.config),
                strengths: report.strengths,
            })
        }
        Algorithm::Random => {
            let budget = require_budget(algorithm, budget)?;
            let n = instance.nurse_count();
            sample_best(instance, algorithm, seed, budget, |rng| RuleString::random(n, rng))
        }
        Algorithm::Fixed(rule) if rule.is_random() => {
            let budget = require_budget(algorithm, budget)?;
            let rules = RuleString::constant(rule, instance.nurse_count());
            sample_best(instance, algorithm, seed, budget, |_| rules.clone())
        }
        Algorithm::Fixed(rule) => {
            if budget == Some(0) {
                return Err(Error::config("budget", "must be at least 1"));
            }
            let rules = RuleString::constant(rule, instance.nurse_count());
            let best = Individual::from(Decoded::new(instance, rules, seed)?);
            let total = best.fitness.total;
            Ok(Outcome {
                algorithm,
                seed,
                budget,
                records: vec![GenerationRecord {
                    generation: 0,
                    best_fitness: total,
                    mean_fitness: total,
                    evaluations: 1,
                }],
                best,
                stop_reason: None,
                config: None,
                strengths: None,
            })
        }
    }
}

fn require_budget(algorithm: Algorithm, budget: Option<u64>) -> Result<u64> {
    match budget {
        Some(b) if b > 0 => Ok(b),
        _ => Err(Error::config(
            "budget",
            format!("`{algorithm}` needs a positive evaluation budget"),
        )),
    }
}

/// Decodes `budget` strings from `next`, each with its own seeded stream,
/// keeping the best under the population order.
fn sample_best(
    instance: &Instance,
    algorithm: Algorithm,
    seed: u64,
    budget: u64,
    mut next: impl FnMut(&mut crate::rng::Stream) -> RuleString,
) -> Result<Outcome> {
    let mut master = stream(seed);
    let mut best: Option<Individual> = None;
    let mut records = Vec::new();
    let mut done = 0u64;
    while done < budget {
        let block = BASELINE_BLOCK.min(budget - done);
        let mut jobs = Vec::with_capacity(block as usize);
        for _ in 0..block {
            let rules = next(&mut master);
            jobs.push((rules, child_seed(&mut master)));
        }
        let decoded: Vec<Individual> = jobs
            .into_par_iter()
            .map(|(rules, s)| Decoded::new(instance, rules, s).map(Individual::from))
            .collect::<Result<_>>()?;
        let mean = decoded.iter().map(|i| i.fitness.total).sum::<f64>() / decoded.len() as f64;
        for ind in decoded {
            if best.as_ref().is_none_or(|b| rank(&ind, b).is_lt()) {
                best = Some(ind);
            }
        }
        done += block;
        records.push(GenerationRecord {
            generation: records.len() as u32,
            best_fitness: best.as_ref().expect("non-empty block").fitness.total,
            mean_fitness: mean,
            evaluations: done,
        });
    }
    Ok(Outcome {
        algorithm,
        seed,
        budget: Some(budget),
        records,
        best: best.expect("budget is positive"),
        stop_reason: None,
        config: None,
        strengths: None,
    })
}

/// Final-solution document written next to the report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub budget: Option<u64>,
    pub rule_string: Vec<usize>,
    pub schedule: Vec<usize>,
    pub total: f64,
    pub preference_cost: f64,
    pub undercover_units: u64,
    pub decode_seed: u64,
    pub evaluations: u64,
    pub generations: u32,
    pub stop_reason: Option<StopReason>,
    pub config: Option<BoaConfig>,
}

impl From<&Outcome> for SolutionDoc {
    fn from(o: &Outcome) -> Self {
        SolutionDoc {
            algorithm: o.algorithm,
            seed: o.seed,
            budget: o.budget,
            rule_string: o.best.genotype.indices(),
            schedule: o.best.schedule.0.clone(),
            total: o.best.fitness.total,
            preference_cost: o.best.fitness.preference_cost,
            undercover_units: o.best.fitness.undercover_units,
            decode_seed: o.best.decode_seed,
            evaluations: o.evaluations(),
            generations: o.records.last().map_or(0, |r| r.generation),
            stop_reason: o.stop_reason,
            config: o.config.clone(),
        }
    }
}

pub fn write_report_csv<W: Write>(records: &[GenerationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(REPORT_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<GenerationRecord>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, REPORT_HEADER)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &str) -> Result<()> {
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != expected {
        return Err(Error::field("header", format!("expected `{expected}`, got `{header}`")));
    }
    Ok(())
}

/// Writes `report.csv` and `solution.json` (and `strengths.txt` when asked
/// and available) into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path, dump_strengths: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = dir.join("report.csv");
    let file = std::fs::File::create(&report).map_err(|e| Error::io(&report, e))?;
    write_report_csv(&outcome.records, std::io::BufWriter::new(file))?;

    let solution = dir.join("solution.json");
    let mut text = serde_json::to_string_pretty(&SolutionDoc::from(outcome))
        .expect("solution document serializes");
    text.push('\n');
    std::fs::write(&solution, text).map_err(|e| Error::io(&solution, e))?;

    if dump_strengths {
        if let Some(table) = &outcome.strengths {
            let path = dir.join("strengths.txt");
            std::fs::write(&path, table.dump()).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Where an experiment instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Path(PathBuf),
    Generate(GenConfig),
}

impl InstanceSource {
    pub fn load(&self) -> Result<(String, Instance)> {
        match self {
            InstanceSource::Path(p) => {
                let id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string());
                Ok((id, Instance::from_path(p)?))
            }
            InstanceSource::Generate(g) => Ok((g.label(), generate_instance(g)?)),
        }
    }
}

/// Parses `nurses=5,patterns=4,mode=planted,seed=3` style generation specs.
/// Recognized keys: `nurses`, `days`, `shifts`, `patterns`, `cost_max`,
/// `mode`, `seed`.
pub fn parse_gen_spec(spec: &str) -> Result<GenConfig> {
    let mut cfg = GenConfig::new(0, GenMode::Random, 0);
    for item in spec.split(',').filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::config("generate", format!("`{item}` is not key=value")))?;
        let bad = |_| Error::config(format!("generate.{key}"), format!("invalid value `{value}`"));
        match key.trim() {
            "nurses" => cfg.nurses = value.parse().map_err(bad)?,
            "days" => cfg.days = value.parse().map_err(bad)?,
            "shifts" | "shifts_per_day" => cfg.shifts_per_day = value.parse().map_err(bad)?,
            "patterns" | "patterns_per_nurse" => cfg.patterns_per_nurse = value.parse().map_err(bad)?,
            "cost_max" => cfg.cost_max = value.parse().map_err(bad)?,
            "seed" => cfg.seed = value.parse().map_err(bad)?,
            "mode" => cfg.mode = value.parse()?,
            other => return Err(Error::config("generate", format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSource>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    /// Decode evaluations allowed per run.
    pub budget: u64,
    #[serde(default)]
    pub boa: BoaConfig,
    /// Measure wall time; when false the column is written as 0 so that
    /// repeated runs produce identical files.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::config("instances", "at least one instance is required"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.budget == 0 {
            return Err(Error::config("budget", "must be positive"));
        }
        if self.algorithms.iter().any(|a| a.is_boa()) && self.budget < self.boa.population_size as u64 {
            return Err(Error::config(
                "budget",
                format!(
                    "budget {} is below the population size {}",
                    self.budget, self.boa.population_size
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance: String,
    pub algorithm: String,
    pub seed: u64,
    pub best_fitness: f64,
    pub evaluations: u64,
    pub wall_time_ms: u64,
}

/// Runs every (instance, algorithm, seed) triple, in parallel, and returns
/// the rows sorted by instance, algorithm name and seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    config.validate()?;
    let instances = config
        .instances
        .iter()
        .map(InstanceSource::load)
        .collect::<Result<Vec<_>>>()?;
    let mut ids = BTreeSet::new();
    for (id, _) in &instances {
        if !ids.insert(id.as_str()) {
            return Err(Error::config("instances", format!("duplicate instance id `{id}`")));
        }
    }

    let mut tasks = Vec::new();
    for (id, instance) in &instances {
        for &algorithm in &config.algorithms {
            for &seed in &config.seeds {
                tasks.push((id.as_str(), instance, algorithm, seed));
            }
        }
    }

    let mut rows = tasks
        .into_par_iter()
        .map(|(id, instance, algorithm, seed)| {
            let started = Instant::now();
            let outcome = solve(instance, algorithm, seed, Some(config.budget), &config.boa)?;
            let wall_time_ms = if config.record_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            };
            Ok(ComparisonRow {
                instance: id.to_string(),
                algorithm: algorithm.to_string(),
                seed,
                best_fitness: outcome.best.fitness.total,
                evaluations: outcome.evaluations(),
                wall_time_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.instance.as_str(), a.algorithm.as_str(), a.seed).cmp(&(
            b.instance.as_str(),
            b.algorithm.as_str(),
            b.seed,
        ))
    });
    Ok(rows)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(COMPARISON_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io("<comparison>", e))?;
    Ok(())
}

pub fn read_comparison_csv<R: Read>(input: R) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, COMPARISON_HEADER)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::worked_instance;

    #[test]
    fn algorithm_tokens() {
        for token in ["boa", "boa+lcs", "random", "fixed:0", "fixed:3"] {
            assert_eq!(token.parse::<Algorithm>().unwrap().to_string(), token);
        }
        for bad in ["fixed:4", "fixed:", "ga", "fixed:x"] {
            assert!(matches!(bad.parse::<Algorithm>(), Err(Error::UnknownAlgorithm(_))));
        }
    }

    #[test]
    fn fixed_cost_greedy_on_worked_instance() {
        let out = solve(&worked_instance(), Algorithm::Fixed(RuleId::COST_GREEDY), 1, Some(50), &BoaConfig::default()).unwrap();
        assert_eq!(out.best.fitness.total, 10.0);
        assert_eq!(out.evaluations(), 1);
    }

    #[test]
    fn random_uses_exact_budget() {
        let out = solve(&worked_instance(), Algorithm::Random, 4, Some(250), &BoaConfig::default()).unwrap();
        assert_eq!(out.evaluations(), 250);
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.best.fitness.total, 1.0);
        assert!(solve(&worked_instance(), Algorithm::Random, 4, None, &BoaConfig::default()).is_err());
    }

    #[test]
    fn gen_spec_parsing() {
        let g = parse_gen_spec("nurses=5,patterns=3,mode=planted,seed=9").unwrap();
        assert_eq!((g.nurses, g.patterns_per_nurse, g.mode, g.seed), (5, 3, GenMode::Planted, 9));
        assert!(parse_gen_spec("nurses=5,colour=red").is_err());
        assert!(parse_gen_spec("nurses=0").is_err());
    }

    #[test]
    fn report_csv_round_trip() {
        let records = vec![
            GenerationRecord { generation: 0, best_fitness: 12.5, mean_fitness: 1.0 / 3.0, evaluations: 100 },
            GenerationRecord { generation: 1, best_fitness: 3.0, mean_fitness: 7.25, evaluations: 150 },
        ];
        let mut buf = Vec::new();
        write_report_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_HEADER);
        assert_eq!(read_report_csv(&buf[..]).unwrap(), records);
    }

    #[test]
    fn experiment_validation() {
        let cfg = ExperimentConfig {
            instances: vec![InstanceSource::Generate(GenConfig::new(3, GenMode::Random, 1))],
            algorithms: vec![Algorithm::Boa],
            seeds: vec![1],
            budget: 50,
            boa: BoaConfig::default(),
            record_wall_time: false,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
        let cfg = ExperimentConfig { seeds: vec![], budget: 500, ..cfg };
        assert!(cfg.validate().is_err());
    }
}
