//! Rule catalog and the step-wise decoder.
//!
//! A [`RuleString`] holds one rule per construction step. Each step assigns
//! exactly one still-unassigned nurse to one of its patterns, chosen by that
//! step's rule, so a string for an `N`-nurse instance has length `N`.
//!
//! | id | name           | choice over (unassigned nurse, pattern) pairs            |
//! |----|----------------|----------------------------------------------------------|
//! | 0  | CostGreedy     | min cost; then max coverage gain, lower nurse, lower pattern |
//! | 1  | CoverGreedy    | max coverage gain; then min cost, lower nurse, lower pattern |
//! | 2  | Ratio          | min `cost / (1 + gain)`; then as CostGreedy                 |
//! | 3  | RandomCheapest | uniform random nurse, its cheapest pattern (lowest index)  |
//!
//! Only rule 3 consumes randomness, exactly one draw per application.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Fitness, Instance, Schedule};

/// Size of the rule catalog.
pub const RULE_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RuleId(u8);

impl RuleId {
    pub const COST_GREEDY: RuleId = RuleId(0);
    pub const COVER_GREEDY: RuleId = RuleId(1);
    pub const RATIO: RuleId = RuleId(2);
    pub const RANDOM_CHEAPEST: RuleId = RuleId(3);

    pub const ALL: [RuleId; RULE_COUNT] = [
        Self::COST_GREEDY,
        Self::COVER_GREEDY,
        Self::RATIO,
        Self::RANDOM_CHEAPEST,
    ];

    pub fn new(index: usize) -> Result<Self> {
        if index < RULE_COUNT {
            Ok(RuleId(index as u8))
        } else {
            Err(Error::RuleOutOfRange(index))
        }
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "CostGreedy",
            1 => "CoverGreedy",
            2 => "Ratio",
            _ => "RandomCheapest",
        }
    }

    pub fn is_random(self) -> bool {
        self == Self::RANDOM_CHEAPEST
    }
}

impl TryFrom<u8> for RuleId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        RuleId::new(usize::from(v))
    }
}

impl From<RuleId> for u8 {
    fn from(r: RuleId) -> u8 {
        r.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One rule per construction step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleString(Vec<RuleId>);

impl RuleString {
    pub fn new(steps: Vec<RuleId>) -> Self {
        Self(steps)
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        indices.iter().map(|&i| RuleId::new(i)).collect::<Result<_>>().map(Self)
    }

    pub fn constant(rule: RuleId, len: usize) -> Self {
        Self(vec![rule; len])
    }

    pub fn steps(&self) -> &[RuleId] {
        &self.0
    }

    pub fn steps_mut(&mut self) -> &mut [RuleId] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|r| r.index()).collect()
    }

    pub fn uses_randomness(&self) -> bool {
        self.0.iter().any(|r| r.is_random())
    }

    /// Uniform random string over the full catalog.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self(
            (0..len)
                .map(|_| RuleId(rng.gen_range(0..RULE_COUNT) as u8))
                .collect(),
        )
    }
}

impl fmt::Display for RuleString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for RuleString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config("rule string", format!("`{t}` is not a rule id")))
                    .and_then(RuleId::new)
            })
            .collect::<Result<_>>()
            .map(Self)
    }
}

/// Demand covered by a pattern that is still outstanding: the sum over slots
/// of `min(cover, remaining)`.
pub fn coverage_reduction(cover: &[u8], remaining: &[u32]) -> u32 {
    cover
        .iter()
        .zip(remaining)
        .map(|(&c, &r)| u32::from(c).min(r))
        .sum()
}

/// Construction state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialState {
    unassigned: Vec<usize>,
    remaining_undercover: Vec<u32>,
    accumulated_cost: f64,
}

impl PartialState {
    pub fn new(instance: &Instance) -> Self {
        Self {
            unassigned: (0..instance.nurse_count()).collect(),
            remaining_undercover: instance.demand().to_vec(),
            accumulated_cost: 0.0,
        }
    }

    /// Unassigned nurse ids in ascending order.
    pub fn unassigned(&self) -> &[usize] {
        &self.unassigned
    }

    /// Outstanding demand per slot.
    pub fn remaining_undercover(&self) -> &[u32] {
        &self.remaining_undercover
    }

    pub fn accumulated_cost(&self) -> f64 {
        self.accumulated_cost
    }

    pub fn is_complete(&self) -> bool {
        self.unassigned.is_empty()
    }

    /// Commits `nurse` to `pattern`.
    ///
    /// # Panics
    /// If `nurse` is not unassigned.
    pub fn assign(&mut self, instance: &Instance, nurse: usize, pattern: usize) {
        let pos = self
            .unassigned
            .iter()
            .position(|&j| j == nurse)
            .expect("nurse is unassigned");
        self.unassigned.remove(pos);
        let p = instance.pattern(nurse, pattern);
        for (r, &c) in self.remaining_undercover.iter_mut().zip(p.cover()) {
            *r -= u32::from(c).min(*r);
        }
        self.accumulated_cost += p.cost();
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    nurse: usize,
    pattern: usize,
    cost: f64,
    gain: u32,
}

fn by_cost(a: &Candidate, b: &Candidate) -> Ordering {
    a.cost.total_cmp(&b.cost).then(b.gain.cmp(&a.gain))
}

fn by_gain(a: &Candidate, b: &Candidate) -> Ordering {
    b.gain.cmp(&a.gain).then(a.cost.total_cmp(&b.cost))
}

// cost_a / (1 + gain_a) vs cost_b / (1 + gain_b); denominators are positive
fn by_ratio(a: &Candidate, b: &Candidate) -> Ordering {
    let lhs = a.cost * (1.0 + f64::from(b.gain));
    let rhs = b.cost * (1.0 + f64::from(a.gain));
    lhs.total_cmp(&rhs).then(b.gain.cmp(&a.gain))
}

/// Picks the first candidate (nurse-major, pattern-minor order) that no later
/// candidate strictly beats, which realizes the lower-nurse, lower-pattern
/// tie-break.
fn best_pair(
    instance: &Instance,
    state: &PartialState,
    cmp: fn(&Candidate, &Candidate) -> Ordering,
) -> (usize, usize) {
    let mut best: Option<Candidate> = None;
    for &nurse in &state.unassigned {
        for (pattern, p) in instance.nurses()[nurse].patterns().iter().enumerate() {
            let cand = Candidate {
                nurse,
                pattern,
                cost: p.cost(),
                gain: coverage_reduction(p.cover(), &state.remaining_undercover),
            };
            if best.is_none_or(|b| cmp(&cand, &b) == Ordering::Less) {
                best = Some(cand);
            }
        }
    }
    let b = best.expect("state has an unassigned nurse");
    (b.nurse, b.pattern)
}

/// Applies one rule to a non-empty state and returns the chosen
/// `(nurse, pattern)` without committing it.
///
/// # Panics
/// If the state has no unassigned nurse.
pub fn apply_rule<R: Rng + ?Sized>(
    instance: &Instance,
    state: &PartialState,
    rule: RuleId,
    rng: &mut R,
) -> (usize, usize) {
    assert!(!state.is_complete(), "apply_rule on a complete state");
    match rule {
        RuleId::COST_GREEDY => best_pair(instance, state, by_cost),
        RuleId::COVER_GREEDY => best_pair(instance, state, by_gain),
        RuleId::RATIO => best_pair(instance, state, by_ratio),
        _ => {
            let nurse = state.unassigned[rng.gen_range(0..state.unassigned.len())];
            let patterns = instance.nurses()[nurse].patterns();
            let pattern = (1..patterns.len()).fold(0, |best, p| {
                if patterns[p].cost() < patterns[best].cost() {
                    p
                } else {
                    best
                }
            });
            (nurse, pattern)
        }
    }
}

/// Builds a schedule by applying `rules[i]` at step `i`.
pub fn decode<R: Rng + ?Sized>(
    instance: &Instance,
    rules: &RuleString,
    rng: &mut R,
) -> Result<(Schedule, Fitness)> {
    let n = instance.nurse_count();
    if rules.len() != n {
        return Err(Error::RuleStringLength {
            expected: n,
            got: rules.len(),
        });
    }
    let mut state = PartialState::new(instance);
    let mut assignment = vec![usize::MAX; n];
    for &rule in rules.steps() {
        let (nurse, pattern) = apply_rule(instance, &state, rule, rng);
        assignment[nurse] = pattern;
        state.assign(instance, nurse, pattern);
    }
    // summed in nurse order so the total matches `evaluate` bit for bit
    let cost = assignment
        .iter()
        .enumerate()
        .map(|(j, &p)| instance.pattern(j, p).cost())
        .sum();
    let undercover = state
        .remaining_undercover
        .iter()
        .map(|&r| u64::from(r))
        .sum();
    Ok((
        Schedule(assignment),
        Fitness::new(cost, undercover, instance.undercover_weight()),
    ))
}
