use apzyme::apsignal::{ApSignal, Harmonic};
use apzyme::diagnostics::{
    attraction_report, common_almost_period, convergence_metric, frequency_module, latin_hypercube,
    simulate_batch, CONVERGENCE_THRESHOLD,
};
use apzyme::integrate::simulate;
use apzyme::model::{EnzymeParams, State4};
use apzyme::ode::StepControl;
use proptest::prelude::*;

fn control() -> StepControl {
    StepControl {
        rtol: 1e-9,
        ..StepControl::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn latin_hypercube_has_one_point_per_stratum(n in 1usize..40, seed in any::<u64>()) {
        let upper = State4::new(3.0, 3.0, 0.5, 0.5);
        let pts = latin_hypercube(n, State4::default(), upper, seed);
        prop_assert_eq!(pts.len(), n);
        let hi = upper.to_array();
        for (c, top) in hi.iter().enumerate() {
            let mut strata: Vec<usize> = pts
                .iter()
                .map(|p| ((p.to_array()[c] / top) * n as f64).floor() as usize)
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
        prop_assert_eq!(pts, latin_hypercube(n, State4::default(), upper, seed));
    }

    #[test]
    fn frequency_module_is_closed_under_the_generators(a in 0.1f64..3.0, b in 3.1f64..6.0) {
        let m = frequency_module(&[a, b]);
        prop_assert!(m.windows(2).all(|w| w[0] < w[1]));
        for f in [0.0, a, b, 2.0 * a, 2.0 * b, a + b, b - a] {
            prop_assert!(m.iter().any(|x| (x - f).abs() <= 1e-12), "{f} missing from {m:?}");
        }
        prop_assert!(m.iter().all(|x| *x >= 0.0));
    }

    /// A shift reported as a simultaneous ε-almost-period really moves every
    /// signal by less than ε at sampled times.
    #[test]
    fn common_almost_periods_are_almost_periods(w1 in 0.5f64..2.0, w2 in 2.0f64..4.0, t in 0.0f64..500.0) {
        let f = ApSignal::new(1.0, vec![Harmonic::new(w1, 1.0, 0.0)]).unwrap();
        let g = ApSignal::new(1.0, vec![Harmonic::new(w2, 0.0, 1.0)]).unwrap();
        let eps = 5e-2;
        if let Some(p) = common_almost_period(&[&f, &g], eps, 1.0, 300.0, 1e-3) {
            prop_assert!(p.defect < eps);
            for s in [&f, &g] {
                prop_assert!((s.evaluate(t + p.tau) - s.evaluate(t)).abs() < eps);
            }
        }
    }
}

#[test]
fn identical_trajectories_have_zero_gap() {
    let p = EnzymeParams::benchmark();
    let a = simulate(&p, State4::new(1.0, 1.0, 0.1, 0.1), 0.0, 50.0, &control()).unwrap();
    let curve = convergence_metric(&a, &a.clone()).unwrap();
    assert!(curve.gaps.iter().all(|g| *g == 0.0));
    assert_eq!(curve.time_to_threshold, Some(0.0));
}

/// The two named initial states merge below 1e-4 before t = 500 and the
/// gap curve is eventually nonincreasing.
#[test]
fn named_initial_states_converge_early() {
    let p = EnzymeParams::benchmark();
    let a = simulate(&p, State4::new(2.0, 2.0, 0.0, 0.0), 0.0, 600.0, &control()).unwrap();
    let b = simulate(&p, State4::new(0.1, 0.1, 0.4, 0.4), 0.0, 600.0, &control()).unwrap();
    let curve = convergence_metric(&a, &b).unwrap();
    let reached = curve
        .time_to_threshold
        .expect("gap falls below the threshold");
    assert!(
        reached < 500.0,
        "reached {CONVERGENCE_THRESHOLD} at t = {reached}"
    );
    assert!(curve.settled_at.is_some_and(|t| t < 500.0));
    assert!(curve.monotone_from < 600.0);
}

/// Ten Latin-hypercube states in `[0,3]² × [0,T/2]²` are pairwise within
/// 1e-4 from t = 1000 on.
#[test]
fn latin_hypercube_states_merge_by_t_1000() {
    let p = EnzymeParams::benchmark();
    let initial = latin_hypercube(10, State4::default(), State4::new(3.0, 3.0, 0.5, 0.5), 11);
    let runs = simulate_batch(&p, &initial, 0.0, 1200.0, &control()).unwrap();
    let report = attraction_report(&runs, 1000.0).unwrap();
    assert!(report.max_tail_gap < CONVERGENCE_THRESHOLD, "{report:?}");
    assert!(report.tail_min_component > 0.0, "{report:?}");
}
