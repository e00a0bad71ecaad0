use num::{BigRational, One};
use proptest::prelude::*;
use unfair_urn::exact::{
    reachable_states, state_distribution, survival_probability, Compensated, DEFAULT_STATE_BUDGET,
};
use unfair_urn::stats::{chi_square_gof, ks_distance, wilson_interval};
use unfair_urn::{
    check_dominance_prefix, construct_proof_path, new_urn, run_trajectory, seeded_rng,
    CriterionKind, DominanceCriterion, ReplacementRule,
};

fn config(max_colours: usize) -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
    (2..=max_colours).prop_flat_map(|q| {
        (
            prop::collection::vec(1u64..6, q),
            prop::collection::vec(1u64..5, q),
        )
    })
}

fn on_lattice(init: &[u64], m: &[u64], counts: &[u64], steps: u64) -> bool {
    let mut draws = 0;
    for ((&x0, &mi), &x) in init.iter().zip(m).zip(counts) {
        if x < x0 || (x - x0) % mi != 0 {
            return false;
        }
        draws += (x - x0) / mi;
    }
    draws == steps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_stay_on_the_lattice((init, m) in config(4), n in 0u64..60, seed in any::<u64>()) {
        let rule = ReplacementRule::new(m.clone()).unwrap();
        let s0 = new_urn(&init, &rule).unwrap();
        let traj = run_trajectory(&s0, &rule, n, &mut seeded_rng(seed)).unwrap();
        for (k, s) in traj.iter_states().enumerate() {
            prop_assert!(on_lattice(&init, &m, &s.counts, k as u64));
            prop_assert_eq!(s.step, k as u64);
        }
    }

    #[test]
    fn same_seed_same_trajectory((init, m) in config(3), n in 0u64..80, seed in any::<u64>()) {
        let rule = ReplacementRule::new(m).unwrap();
        let s0 = new_urn(&init, &rule).unwrap();
        let a = run_trajectory(&s0, &rule, n, &mut seeded_rng(seed)).unwrap();
        let b = run_trajectory(&s0, &rule, n, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_support_is_reachable_and_normalised((init, m) in config(3), n in 0u64..6) {
        let rule = ReplacementRule::new(m.clone()).unwrap();
        let s0 = new_urn(&init, &rule).unwrap();
        let dist = state_distribution::<BigRational>(&s0, &rule, n, DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!(dist.total_mass().is_one());
        let reach = reachable_states(&s0, &rule, n);
        for state in dist.entries.keys() {
            prop_assert!(reach.contains(state));
            prop_assert!(on_lattice(&init, &m, state, n));
        }
        prop_assert_eq!(reach.len(), dist.entries.len());
        let float = state_distribution::<Compensated>(&s0, &rule, n, DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!((float.total_mass().value() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn survival_is_non_increasing_in_both_modes(
        (init, m) in config(3),
        kind in prop_oneof![Just(CriterionKind::Majority), Just(CriterionKind::Plurality)],
        n in 0u64..12,
    ) {
        let rule = ReplacementRule::new(m).unwrap();
        let s0 = new_urn(&init, &rule).unwrap();
        let crit = DominanceCriterion::new(kind);
        let exact = survival_probability::<BigRational>(&s0, &rule, n, &crit, DEFAULT_STATE_BUDGET).unwrap();
        let float = survival_probability::<Compensated>(&s0, &rule, n, &crit, DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!(exact.values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(exact.values.iter().all(|p| *p <= BigRational::one()));
        for (e, f) in exact.to_f64().iter().zip(float.to_f64()) {
            prop_assert!((e - f).abs() < 1e-13);
        }
    }

    #[test]
    fn proof_path_endpoints_match_full_scan(
        w0 in 0u64..12,
        gap in 1u64..12,
        mb in 1u64..7,
        mw in 1u64..7,
        kb in 0u64..15,
        kw in 0u64..15,
    ) {
        let rule = ReplacementRule::new(vec![mb, mw]).unwrap();
        let path = construct_proof_path(w0 + gap, w0, &rule, kb, kw).unwrap();
        let scan = check_dominance_prefix(&path.trajectory, &DominanceCriterion::pairwise()).unwrap();
        prop_assert_eq!(path.positive_throughout, scan.holds);
    }

    #[test]
    fn wilson_contains_the_point_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0, conf in 0.5f64..0.9999) {
        let s = (frac * trials as f64).round() as u64;
        let (lo, hi) = wilson_interval(s, trials, conf).unwrap();
        let p = s as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn chi_square_ignores_cell_order(
        cells in prop::collection::vec((0u64..400, 0.01f64..1.0), 2..12),
        rot in 0usize..12,
    ) {
        let (obs, exp): (Vec<u64>, Vec<f64>) = cells.iter().copied().unzip();
        prop_assume!(obs.iter().any(|&o| o > 0));
        let k = rot % obs.len();
        let mut obs2 = obs.clone();
        let mut exp2 = exp.clone();
        obs2.rotate_left(k);
        exp2.rotate_left(k);
        obs2.reverse();
        exp2.reverse();
        let a = chi_square_gof(&obs, &exp, 1e-3);
        let b = chi_square_gof(&obs2, &exp2, 1e-3);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.size, b.size);
                prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
                prop_assert_eq!(a.passed, b.passed);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "order changed the outcome: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn ks_is_bounded_and_reparameterisation_invariant(mut xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        xs.sort_by(f64::total_cmp);
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        let d = ks_distance(&xs, &logistic, 1e-3).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.statistic));
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let shifted = |y: f64| if y <= 0.0 { 0.0 } else { logistic(y.ln()) };
        let d2 = ks_distance(&ys, &shifted, 1e-3).unwrap();
        prop_assert!((d.statistic - d2.statistic).abs() < 1e-9);
    }
}
