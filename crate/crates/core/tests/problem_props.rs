use proptest::prelude::*;
use rand::Rng;
use rulesched::problem::{enumerate_optimum, evaluate, generate_instance, GenConfig, GenMode, Instance, Pattern, Schedule};
use rulesched::rng::stream;

fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=4, 2usize..=4, 1usize..=3, 1usize..=2, any::<u64>()).prop_map(|(nurses, patterns, days, shifts, seed)| {
        let mut cfg = GenConfig::new(nurses, GenMode::Random, seed);
        cfg.patterns_per_nurse = patterns;
        cfg.days = days;
        cfg.shifts_per_day = shifts;
        generate_instance(&cfg).unwrap()
    })
}

fn closed_form(inst: &Instance, s: &Schedule) -> (f64, u64) {
    let mut cost = 0.0;
    let mut under = 0u64;
    for j in 0..inst.nurse_count() {
        cost += inst.pattern(j, s.0[j]).cost();
    }
    for slot in 0..inst.slots() {
        let covered: u32 = (0..inst.nurse_count())
            .map(|j| u32::from(inst.pattern(j, s.0[j]).cover()[slot]))
            .sum();
        under += u64::from(inst.demand()[slot].saturating_sub(covered));
    }
    (cost, under)
}

proptest! {
    #[test]
    fn evaluate_matches_closed_form(inst in small_instance(), seed in any::<u64>()) {
        let mut rng = stream(seed);
        let s = Schedule(inst.nurses().iter().map(|n| rng.gen_range(0..n.patterns().len())).collect());
        let f = evaluate(&inst, &s).unwrap();
        let (cost, under) = closed_form(&inst, &s);
        prop_assert_eq!(f.preference_cost, cost);
        prop_assert_eq!(f.undercover_units, under);
        prop_assert_eq!(f.total, cost + inst.undercover_weight() * under as f64);
        prop_assert_eq!(f, evaluate(&inst, &s).unwrap());
    }

    #[test]
    fn oracle_beats_random_schedules(inst in small_instance(), seed in any::<u64>()) {
        let (best, opt) = enumerate_optimum(&inst, 1_000_000).unwrap();
        prop_assert_eq!(evaluate(&inst, &best).unwrap(), opt);
        let mut rng = stream(seed);
        for _ in 0..1000 {
            let s = Schedule(inst.nurses().iter().map(|n| rng.gen_range(0..n.patterns().len())).collect());
            prop_assert!(opt.total <= evaluate(&inst, &s).unwrap().total);
        }
    }

    #[test]
    fn over_coverage_is_free(inst in small_instance(), seed in any::<u64>()) {
        // give every nurse an extra all-ones zero-cost pattern; demand met by
        // one such nurse stays met when more of them switch to it
        let slots = inst.slots();
        let nurses: Vec<Vec<Pattern>> = inst
            .nurses()
            .iter()
            .map(|n| {
                let mut p = n.patterns().to_vec();
                p.push(Pattern::new(vec![1; slots], 0.0));
                p
            })
            .collect();
        let n = nurses.len();
        let demand: Vec<Vec<u32>> = vec![vec![1; inst.shifts_per_day()]; inst.days()];
        let ext = Instance::new(inst.days(), inst.shifts_per_day(), nurses, demand, 100.0).unwrap();
        let mut rng = stream(seed);
        let mut s: Vec<usize> = (0..n).map(|j| rng.gen_range(0..ext.nurses()[j].patterns().len() - 1)).collect();
        s[0] = ext.nurses()[0].patterns().len() - 1;
        let before = evaluate(&ext, &Schedule(s.clone())).unwrap();
        prop_assert_eq!(before.undercover_units, 0);
        for j in 1..n {
            let prev = evaluate(&ext, &Schedule(s.clone())).unwrap().total;
            s[j] = ext.nurses()[j].patterns().len() - 1;
            prop_assert!(evaluate(&ext, &Schedule(s.clone())).unwrap().total <= prev);
        }
    }
}

#[test]
fn planted_argmin_is_planted_assignment() {
    for seed in 0..100 {
        let mut cfg = GenConfig::new(5, GenMode::Planted, seed);
        cfg.patterns_per_nurse = 3;
        let g = rulesched::generate(&cfg).unwrap();
        let (s, f) = enumerate_optimum(&g.instance, 1_000_000).unwrap();
        assert_eq!(f.total, 0.0);
        assert_eq!(Some(s), g.planted);
    }
}
