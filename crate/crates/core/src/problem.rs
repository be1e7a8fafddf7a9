//! Nurse-scheduling instances, fitness evaluation, instance generation and
//! the exhaustive optimum oracle.
//!
//! A schedule picks one shift pattern per nurse. Each pattern covers a subset
//! of the `days * shifts_per_day` slots and carries a preference cost. The
//! objective is the summed preference cost plus a linear penalty for every
//! unit of demand left uncovered; covering a slot more than required is free.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

pub const DEFAULT_DAYS: usize = 7;
pub const DEFAULT_SHIFTS_PER_DAY: usize = 2;
pub const DEFAULT_UNDERCOVER_WEIGHT: f64 = 100.0;
pub const DEFAULT_COMBO_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    cover: Vec<u8>,
    cost: f64,
}

impl Pattern {
    pub fn new(cover: Vec<u8>, cost: f64) -> Self {
        Self { cover, cost }
    }

    /// Binary cover vector indexed by slot (`day * shifts_per_day + shift`).
    pub fn cover(&self) -> &[u8] {
        &self.cover
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nurse {
    id: usize,
    patterns: Vec<Pattern>,
}

impl Nurse {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }
}

/// A validated nurse-scheduling instance.
///
/// Demand is stored flattened by slot; [`Instance::demand_matrix`] gives the
/// `[day][shift]` view used by the document format.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    days: usize,
    shifts_per_day: usize,
    nurses: Vec<Nurse>,
    demand: Vec<u32>,
    undercover_weight: f64,
}

impl Instance {
    /// Builds an instance from per-nurse pattern lists and a `[day][shift]`
    /// demand matrix, checking every invariant.
    pub fn new(
        days: usize,
        shifts_per_day: usize,
        nurses: Vec<Vec<Pattern>>,
        demand: Vec<Vec<u32>>,
        undercover_weight: f64,
    ) -> Result<Self> {
        if days == 0 {
            return Err(Error::field("days", "must be at least 1"));
        }
        if shifts_per_day == 0 {
            return Err(Error::field("shifts_per_day", "must be at least 1"));
        }
        if !(undercover_weight >= 0.0) || !undercover_weight.is_finite() {
            return Err(Error::field(
                "undercover_weight",
                format!("must be a finite non-negative number, got {undercover_weight}"),
            ));
        }
        if demand.len() != days {
            return Err(Error::field(
                "demand",
                format!("expected {days} rows, got {}", demand.len()),
            ));
        }
        let mut flat = Vec::with_capacity(days * shifts_per_day);
        for (d, row) in demand.iter().enumerate() {
            if row.len() != shifts_per_day {
                return Err(Error::field(
                    format!("demand[{d}]"),
                    format!("expected {shifts_per_day} entries, got {}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
        if nurses.is_empty() {
            return Err(Error::field("nurses", "at least one nurse is required"));
        }
        let slots = days * shifts_per_day;
        let mut out = Vec::with_capacity(nurses.len());
        for (j, patterns) in nurses.into_iter().enumerate() {
            if patterns.is_empty() {
                return Err(Error::field(
                    format!("nurses[{j}].patterns"),
                    "pattern list is empty",
                ));
            }
            for (p, pattern) in patterns.iter().enumerate() {
                let path = format!("nurses[{j}].patterns[{p}]");
                if pattern.cover.len() != slots {
                    return Err(Error::field(
                        format!("{path}.cover"),
                        format!(
                            "length {} does not match days * shifts_per_day = {slots}",
                            pattern.cover.len()
                        ),
                    ));
                }
                if let Some(bad) = pattern.cover.iter().position(|&c| c > 1) {
                    return Err(Error::field(
                        format!("{path}.cover[{bad}]"),
                        "entries must be 0 or 1",
                    ));
                }
                if !(pattern.cost >= 0.0) || !pattern.cost.is_finite() {
                    return Err(Error::field(
                        format!("{path}.cost"),
                        format!("negative or non-finite cost {}", pattern.cost),
                    ));
                }
            }
            out.push(Nurse { id: j, patterns });
        }
        Ok(Self {
            days,
            shifts_per_day,
            nurses: out,
            demand: flat,
            undercover_weight,
        })
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn shifts_per_day(&self) -> usize {
        self.shifts_per_day
    }

    pub fn slots(&self) -> usize {
        self.days * self.shifts_per_day
    }

    pub fn nurses(&self) -> &[Nurse] {
        &self.nurses
    }

    pub fn nurse_count(&self) -> usize {
        self.nurses.len()
    }

    pub fn pattern(&self, nurse: usize, pattern: usize) -> &Pattern {
        &self.nurses[nurse].patterns[pattern]
    }

    /// Demand flattened by slot index.
    pub fn demand(&self) -> &[u32] {
        &self.demand
    }

    pub fn demand_matrix(&self) -> Vec<Vec<u32>> {
        self.demand
            .chunks(self.shifts_per_day)
            .map(<[u32]>::to_vec)
            .collect()
    }

    pub fn total_demand(&self) -> u64 {
        self.demand.iter().map(|&r| u64::from(r)).sum()
    }

    pub fn undercover_weight(&self) -> f64 {
        self.undercover_weight
    }

    /// Number of distinct full assignments, saturating at `u128::MAX`.
    pub fn combinations(&self) -> u128 {
        self.nurses
            .iter()
            .fold(1u128, |acc, n| acc.saturating_mul(n.patterns.len() as u128))
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_instance(text)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_instance(&text)
    }

    /// Serializes to the instance document format.
    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            days: self.days as i64,
            shifts_per_day: self.shifts_per_day as i64,
            undercover_weight: self.undercover_weight,
            demand: self
                .demand_matrix()
                .into_iter()
                .map(|row| row.into_iter().map(i64::from).collect())
                .collect(),
            nurses: self
                .nurses
                .iter()
                .map(|n| NurseDoc {
                    patterns: n
                        .patterns
                        .iter()
                        .map(|p| PatternDoc {
                            cover: p.cover.iter().map(|&c| i64::from(c)).collect(),
                            cost: p.cost,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("instance document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default = "default_days")]
    days: i64,
    #[serde(default = "default_shifts")]
    shifts_per_day: i64,
    #[serde(default = "default_weight")]
    undercover_weight: f64,
    demand: Vec<Vec<i64>>,
    nurses: Vec<NurseDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NurseDoc {
    patterns: Vec<PatternDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternDoc {
    cover: Vec<i64>,
    cost: f64,
}

fn default_days() -> i64 {
    DEFAULT_DAYS as i64
}

fn default_shifts() -> i64 {
    DEFAULT_SHIFTS_PER_DAY as i64
}

fn default_weight() -> f64 {
    DEFAULT_UNDERCOVER_WEIGHT
}

fn positive_count(value: i64, path: &str) -> Result<usize> {
    if value < 1 {
        return Err(Error::field(path, format!("must be at least 1, got {value}")));
    }
    Ok(value as usize)
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let days = positive_count(doc.days, "days")?;
    let shifts_per_day = positive_count(doc.shifts_per_day, "shifts_per_day")?;

    let mut demand = Vec::with_capacity(doc.demand.len());
    for (d, row) in doc.demand.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (s, &r) in row.iter().enumerate() {
            let r = u32::try_from(r).map_err(|_| {
                Error::field(format!("demand[{d}][{s}]"), format!("negative or too large demand {r}"))
            })?;
            out.push(r);
        }
        demand.push(out);
    }

    let mut nurses = Vec::with_capacity(doc.nurses.len());
    for (j, nurse) in doc.nurses.iter().enumerate() {
        let mut patterns = Vec::with_capacity(nurse.patterns.len());
        for (p, pattern) in nurse.patterns.iter().enumerate() {
            let mut cover = Vec::with_capacity(pattern.cover.len());
            for (k, &c) in pattern.cover.iter().enumerate() {
                if c != 0 && c != 1 {
                    return Err(Error::field(
                        format!("nurses[{j}].patterns[{p}].cover[{k}]"),
                        format!("entries must be 0 or 1, got {c}"),
                    ));
                }
                cover.push(c as u8);
            }
            patterns.push(Pattern::new(cover, pattern.cost));
        }
        nurses.push(patterns);
    }

    Instance::new(days, shifts_per_day, nurses, demand, doc.undercover_weight)
}

/// One pattern index per nurse.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<usize>);

impl Schedule {
    pub fn assignment(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.nurse_count() {
            return Err(Error::ScheduleLength {
                expected: instance.nurse_count(),
                got: self.0.len(),
            });
        }
        for (nurse, &pattern) in self.0.iter().enumerate() {
            let available = instance.nurses[nurse].patterns.len();
            if pattern >= available {
                return Err(Error::InvalidPattern {
                    nurse,
                    pattern,
                    available,
                });
            }
        }
        Ok(())
    }
}

/// Fitness breakdown. Lower `total` is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub total: f64,
    pub preference_cost: f64,
    pub undercover_units: u64,
}

impl Fitness {
    pub fn new(preference_cost: f64, undercover_units: u64, undercover_weight: f64) -> Self {
        Self {
            total: preference_cost + undercover_weight * undercover_units as f64,
            preference_cost,
            undercover_units,
        }
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (cost {}, undercover {})",
            self.total, self.preference_cost, self.undercover_units
        )
    }
}

/// Scores a schedule from scratch.
pub fn evaluate(instance: &Instance, schedule: &Schedule) -> Result<Fitness> {
    schedule.validate(instance)?;
    let mut covered = vec![0u32; instance.slots()];
    let mut cost = 0.0;
    for (nurse, &p) in schedule.0.iter().enumerate() {
        let pattern = instance.pattern(nurse, p);
        cost += pattern.cost;
        for (c, &bit) in covered.iter_mut().zip(&pattern.cover) {
            *c += u32::from(bit);
        }
    }
    let undercover = instance
        .demand
        .iter()
        .zip(&covered)
        .map(|(&r, &c)| u64::from(r.saturating_sub(c)))
        .sum();
    Ok(Fitness::new(cost, undercover, instance.undercover_weight))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Random,
    Planted,
}

impl std::str::FromStr for GenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(GenMode::Random),
            "planted" => Ok(GenMode::Planted),
            other => Err(Error::config("mode", format!("expected random or planted, got `{other}`"))),
        }
    }
}

impl fmt::Display for GenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenMode::Random => "random",
            GenMode::Planted => "planted",
        })
    }
}

/// Parameters for synthetic instance generation. Costs are drawn from
/// `[0, cost_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub nurses: usize,
    #[serde(default = "GenConfig::default_days")]
    pub days: usize,
    #[serde(default = "GenConfig::default_shifts")]
    pub shifts_per_day: usize,
    #[serde(default = "GenConfig::default_patterns")]
    pub patterns_per_nurse: usize,
    #[serde(default = "GenConfig::default_cost_max")]
    pub cost_max: u32,
    #[serde(default = "GenConfig::default_mode")]
    pub mode: GenMode,
    #[serde(default)]
    pub seed: u64,
}

impl GenConfig {
    pub fn new(nurses: usize, mode: GenMode, seed: u64) -> Self {
        Self {
            nurses,
            days: DEFAULT_DAYS,
            shifts_per_day: DEFAULT_SHIFTS_PER_DAY,
            patterns_per_nurse: 4,
            cost_max: 10,
            mode,
            seed,
        }
    }

    fn default_days() -> usize {
        DEFAULT_DAYS
    }
    fn default_shifts() -> usize {
        DEFAULT_SHIFTS_PER_DAY
    }
    fn default_patterns() -> usize {
        4
    }
    fn default_cost_max() -> u32 {
        10
    }
    fn default_mode() -> GenMode {
        GenMode::Random
    }

    pub fn validate(&self) -> Result<()> {
        if self.nurses == 0 {
            return Err(Error::config("nurses", "must be at least 1"));
        }
        if self.days == 0 {
            return Err(Error::config("days", "must be at least 1"));
        }
        if self.shifts_per_day == 0 {
            return Err(Error::config("shifts_per_day", "must be at least 1"));
        }
        if self.patterns_per_nurse < 2 {
            return Err(Error::config("patterns_per_nurse", "must be at least 2"));
        }
        if self.mode == GenMode::Planted && self.cost_max == 0 {
            return Err(Error::config(
                "cost_max",
                "planted mode needs cost_max >= 1 so that non-planted patterns cost at least 1",
            ));
        }
        Ok(())
    }

    /// Short identifier used in comparison tables.
    pub fn label(&self) -> String {
        format!(
            "gen-{}-n{}-p{}-d{}x{}-s{}",
            self.mode, self.nurses, self.patterns_per_nurse, self.days, self.shifts_per_day, self.seed
        )
    }
}

/// A generated instance, plus the planted optimum when generated in planted mode.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub planted: Option<Schedule>,
}

pub fn generate_instance(config: &GenConfig) -> Result<Instance> {
    generate(config).map(|g| g.instance)
}

/// Deterministic instance generator.
///
/// Random mode draws every cover bit with probability 1/2, costs uniformly in
/// `[0, cost_max]` and demand uniformly in `[0, nurses / 2]`. Planted mode
/// marks one random pattern per nurse with cost 0 (others cost at least 1) and
/// sets demand to exactly what those patterns cover.
pub fn generate(config: &GenConfig) -> Result<Generated> {
    config.validate()?;
    let mut rng = stream(config.seed);
    let slots = config.days * config.shifts_per_day;
    let mut nurses = Vec::with_capacity(config.nurses);
    let mut planted = Vec::with_capacity(config.nurses);

    for _ in 0..config.nurses {
        let designated = match config.mode {
            GenMode::Random => None,
            GenMode::Planted => Some(rng.gen_range(0..config.patterns_per_nurse)),
        };
        let mut patterns = Vec::with_capacity(config.patterns_per_nurse);
        for p in 0..config.patterns_per_nurse {
            let cover: Vec<u8> = (0..slots).map(|_| u8::from(rng.gen_bool(0.5))).collect();
            let cost = match designated {
                None => rng.gen_range(0..=config.cost_max),
                Some(d) if d == p => 0,
                Some(_) => rng.gen_range(1..=config.cost_max),
            };
            patterns.push(Pattern::new(cover, f64::from(cost)));
        }
        if let Some(d) = designated {
            planted.push(d);
        }
        nurses.push(patterns);
    }

    let demand_flat: Vec<u32> = match config.mode {
        GenMode::Random => {
            let hi = (config.nurses / 2) as u32;
            (0..slots).map(|_| rng.gen_range(0..=hi)).collect()
        }
        GenMode::Planted => {
            let mut covered = vec![0u32; slots];
            for (patterns, &d) in nurses.iter().zip(&planted) {
                for (c, &bit) in covered.iter_mut().zip(&patterns[d].cover) {
                    *c += u32::from(bit);
                }
            }
            covered
        }
    };
    let demand = demand_flat
        .chunks(config.shifts_per_day)
        .map(<[u32]>::to_vec)
        .collect();

    let instance = Instance::new(
        config.days,
        config.shifts_per_day,
        nurses,
        demand,
        DEFAULT_UNDERCOVER_WEIGHT,
    )?;
    Ok(Generated {
        instance,
        planted: (config.mode == GenMode::Planted).then_some(Schedule(planted)),
    })
}

/// Exhaustively evaluates every full assignment and returns a minimum.
///
/// Assignments are visited in lexicographic order and only strictly better
/// ones replace the incumbent, so ties resolve to the lexicographically
/// smallest assignment.
pub fn enumerate_optimum(instance: &Instance, combo_budget: u64) -> Result<(Schedule, Fitness)> {
    let combinations = instance.combinations();
    if combinations > u128::from(combo_budget) {
        return Err(Error::BudgetExceeded {
            combinations,
            budget: combo_budget,
        });
    }

    let n = instance.nurse_count();
    let slots = instance.slots();
    let sizes: Vec<usize> = instance.nurses.iter().map(|nu| nu.patterns.len()).collect();
    let mut current = vec![0usize; n];
    // covered[j] = slot coverage contributed by nurses 0..j under `current`
    let mut covered = vec![vec![0u32; slots]; n + 1];
    let mut cost = vec![0.0f64; n + 1];
    let mut best: Option<(Vec<usize>, Fitness)> = None;
    let mut dirty_from = 0;

    loop {
        for j in dirty_from..n {
            let pattern = instance.pattern(j, current[j]);
            let (head, tail) = covered.split_at_mut(j + 1);
            for ((out, &prev), &bit) in tail[0].iter_mut().zip(&head[j]).zip(&pattern.cover) {
                *out = prev + u32::from(bit);
            }
            cost[j + 1] = cost[j] + pattern.cost;
        }
        let undercover: u64 = instance
            .demand
            .iter()
            .zip(&covered[n])
            .map(|(&r, &c)| u64::from(r.saturating_sub(c)))
            .sum();
        let fitness = Fitness::new(cost[n], undercover, instance.undercover_weight);
        if best.as_ref().is_none_or(|(_, b)| fitness.total < b.total) {
            best = Some((current.clone(), fitness));
        }

        // odometer, last nurse fastest
        let mut j = n;
        loop {
            if j == 0 {
                let (assignment, fitness) = best.expect("at least one assignment");
                return Ok((Schedule(assignment), fitness));
            }
            j -= 1;
            current[j] += 1;
            if current[j] < sizes[j] {
                break;
            }
            current[j] = 0;
        }
        dirty_from = j;
    }
}
