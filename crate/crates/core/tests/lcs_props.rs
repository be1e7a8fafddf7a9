use proptest::prelude::*;
use rand::Rng;
use rulesched::construction::{decode, RuleString, RULE_COUNT};
use rulesched::lcs::{hill_climb, HcConfig, StrengthTable};
use rulesched::problem::{generate_instance, GenConfig, GenMode, Instance};
use rulesched::rng::stream;
mod common;
use common::worked_instance;

fn all_strings(n: usize, k: usize) -> Vec<RuleString> {
    (0..k.pow(n as u32))
        .map(|mut code| {
            let v: Vec<usize> = (0..n).map(|_| { let r = code % k; code /= k; r }).collect();
            RuleString::from_indices(&v).unwrap()
        })
        .collect()
}

fn instance(nurses: usize, seed: u64) -> Instance {
    generate_instance(&GenConfig::new(nurses, GenMode::Random, seed)).unwrap()
}

proptest! {
    #[test]
    fn strengths_stay_bounded(ops in prop::collection::vec((prop::collection::vec(0usize..4, 3), 0.0f64..400.0), 0..40)) {
        let mut t = StrengthTable::with_defaults(3);
        for (used, delta) in ops {
            t.reinforce(&RuleString::from_indices(&used).unwrap(), delta).unwrap();
            for i in 0..3 {
                prop_assert!(t.row(i).iter().all(|&s| s > 0.0 && s <= t.cap()));
            }
        }
    }

    #[test]
    fn reinforce_touches_exactly_used_entries(seed in any::<u64>(), delta in 0.0f64..5.0) {
        let mut rng = stream(seed);
        let n = rng.gen_range(1..8);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..RULE_COUNT).map(|_| rng.gen_range(0.001..1000.0)).collect()).collect();
        let mut t = StrengthTable::from_rows(rows, 1000.0).unwrap();
        let used = RuleString::random(n, &mut rng);
        let before = t.clone();
        t.reinforce(&used, delta).unwrap();
        for i in 0..n {
            for r in 0..RULE_COUNT {
                if r == used.steps()[i].index() {
                    prop_assert_eq!(t.get(i, r), (before.get(i, r) + delta).min(1000.0));
                } else {
                    prop_assert_eq!(t.get(i, r).to_bits(), before.get(i, r).to_bits());
                }
            }
        }
    }

    #[test]
    fn climb_never_worsens(n in 1usize..10, iseed in any::<u64>(), seed in any::<u64>(), iterations in 0usize..80) {
        let inst = instance(n, iseed);
        let mut rng = stream(seed);
        let start = RuleString::random(n, &mut rng);
        let mut table = StrengthTable::with_defaults(n);
        let cfg = HcConfig { iterations, delta: 0.1 };
        let out = hill_climb(&inst, &start, &mut table, &cfg, &mut rng).unwrap();
        prop_assert!(out.best.fitness.total <= out.trajectory[0]);
        prop_assert!(out.trajectory.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(out.evaluations <= iterations as u64 + 1);
    }
}

#[test]
fn worked_instance_reaches_rule_string_optimum() {
    let inst = worked_instance();
    // certify the optimum over all 16 strings by exhaustive decode
    let optimum = all_strings(2, RULE_COUNT)
        .iter()
        .flat_map(|s| (0..16).map(move |seed| (s.clone(), seed)))
        .map(|(s, seed)| decode(&inst, &s, &mut stream(seed)).unwrap().1.total)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(optimum, 1.0);

    let start = RuleString::from_indices(&[0, 0]).unwrap();
    let hits = (0..100)
        .filter(|&seed| {
            let mut table = StrengthTable::with_defaults(2);
            let out = hill_climb(&inst, &start, &mut table, &HcConfig::default(), &mut stream(seed)).unwrap();
            assert_eq!(out.trajectory[0], 10.0);
            out.best.fitness.total == optimum
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

fn degenerate_table(target: &RuleString) -> StrengthTable {
    let rows = target
        .steps()
        .iter()
        .map(|r| {
            let mut row = vec![1e-12; RULE_COUNT];
            row[r.index()] = 1000.0;
            row
        })
        .collect();
    StrengthTable::from_rows(rows, 1000.0).unwrap()
}

fn total(inst: &Instance, s: &RuleString) -> f64 {
    decode(inst, s, &mut stream(0)).unwrap().1.total
}

/// With all strength on a target string, every proposal copies one target
/// rule. The climber therefore ends either at least as good as the target or
/// in a string where no single copy of a target rule improves.
#[test]
fn degenerate_strengths_steer_toward_target() {
    let mut reached = 0;
    let mut runs = 0;
    for nurses in 1..=3 {
        for iseed in 0..30 {
            let inst = instance(nurses, iseed);
            let deterministic: Vec<(RuleString, f64)> = all_strings(nurses, RULE_COUNT)
                .into_iter()
                .filter(|s| !s.uses_randomness())
                .map(|s| {
                    let f = total(&inst, &s);
                    (s, f)
                })
                .collect();
            let (target, target_total) = deterministic
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .cloned()
                .unwrap();
            for (start, _) in &deterministic {
                let mut table = degenerate_table(&target);
                let cfg = HcConfig { iterations: 200, delta: 0.1 };
                let out = hill_climb(&inst, start, &mut table, &cfg, &mut stream(iseed)).unwrap();
                assert!(out.accepted_moves() <= nurses * RULE_COUNT);
                runs += 1;
                let end = &out.best.rules;
                if out.best.fitness.total <= target_total {
                    reached += 1;
                    continue;
                }
                for i in 0..nurses {
                    let mut copy = end.clone();
                    copy.steps_mut()[i] = target.steps()[i];
                    assert!(
                        total(&inst, &copy) >= out.best.fitness.total,
                        "nurses {nurses} instance {iseed} start {start}: improving target move left at step {i}"
                    );
                }
            }
        }
    }
    assert!(reached * 2 > runs, "{reached}/{runs}");
}

#[test]
fn target_moves_can_stall_in_local_optimum() {
    let inst = instance(2, 5);
    let target = RuleString::from_indices(&[1, 1]).unwrap();
    let start = RuleString::from_indices(&[0, 0]).unwrap();
    let target_total = total(&inst, &target);
    let mut table = degenerate_table(&target);
    let cfg = HcConfig { iterations: 200, delta: 0.1 };
    let out = hill_climb(&inst, &start, &mut table, &cfg, &mut stream(5)).unwrap();
    assert!(out.best.fitness.total > target_total);
    assert_eq!(out.accepted_moves(), 0);
    for half in [[1, 0], [0, 1]] {
        assert!(total(&inst, &RuleString::from_indices(&half).unwrap()) >= total(&inst, &start));
    }
}
