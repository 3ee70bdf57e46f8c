use apzyme::apsignal::{
    fourier_coefficient, mean_value_empirical, parseval_defect, ApSignal, Harmonic, SampledSignal,
    TimeWindow, DEFAULT_QUADRATURE_STEP,
};
use apzyme::model::FORCING_GRID;
use proptest::prelude::*;

/// Trapezoid-rule error on top of the analytic truncation bounds. The
/// integrands are smooth with |φ''| ≲ 40 and the quadrature step resolves
/// the fastest frequency, so the end corrections stay far below this.
const QUADRATURE_TOL: f64 = 1e-7;

/// Frequencies in `[0.2, 4]` separated by at least 0.05, so that windowed
/// means and coefficients have finite leakage bounds.
fn frequencies() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..4.0, 1..=3).prop_filter("separated", |fs| {
        let mut v = fs.clone();
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] >= 0.05)
    })
}

fn signal() -> impl Strategy<Value = ApSignal> {
    (-2.0f64..2.0, frequencies())
        .prop_flat_map(|(offset, fs)| {
            let n = fs.len();
            (
                Just(offset),
                Just(fs),
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
            )
        })
        .prop_map(|(offset, fs, coeffs)| {
            let terms = fs
                .into_iter()
                .zip(coeffs)
                .map(|(f, (a, b))| Harmonic::new(f, a, b))
                .collect();
            ApSignal::new(offset, terms).unwrap()
        })
}

fn windowed_mean(s: &ApSignal, w: TimeWindow) -> f64 {
    let samples = s.sample(w, s.quadrature_step(DEFAULT_QUADRATURE_STEP));
    mean_value_empirical(&samples, w).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn windowed_mean_converges_at_rate_one_over_w(s in signal(), start in -50.0f64..50.0) {
        let mut previous_bound = f64::INFINITY;
        for length in [250.0, 500.0, 1000.0, 2000.0] {
            let w = TimeWindow::new(start, start + length).unwrap();
            let err = (windowed_mean(&s, w) - s.mean_value_exact()).abs();
            let bound = s.mean_error_bound(length);
            prop_assert!(err <= bound + QUADRATURE_TOL, "W = {length}: error {err} > {bound}");
            prop_assert!(bound <= 0.5 * previous_bound + 1e-15);
            previous_bound = bound;
        }
    }

    #[test]
    fn fourier_coefficients_match_the_spectrum(s in signal()) {
        let w = TimeWindow::from_origin(2000.0).unwrap();
        let samples = s.sample(w, s.quadrature_step(DEFAULT_QUADRATURE_STEP));
        // Every spectral line ν ≠ λ leaks at most |c_ν|·2/(|ν − λ|·W).
        let mut lines = vec![(0.0, s.offset().abs())];
        for h in s.terms() {
            lines.push((h.frequency, 0.5 * h.amplitude()));
            lines.push((-h.frequency, 0.5 * h.amplitude()));
        }
        for probe in s.frequencies().chain([0.0]) {
            let leak: f64 = lines
                .iter()
                .filter(|(nu, _)| (nu - probe).abs() > 1e-12)
                .map(|(nu, c)| 2.0 * c / ((nu - probe).abs() * w.length()))
                .sum();
            let got = fourier_coefficient(&samples, probe, w).unwrap();
            let err = (got - s.coefficient_at(probe)).norm();
            prop_assert!(err <= leak + QUADRATURE_TOL, "λ = {probe}: error {err} > {leak}");
        }
    }

    #[test]
    fn parseval_holds_exactly_and_empirically(s in signal()) {
        let square = s.product(&s);
        prop_assert!((square.mean_value_exact() - s.coefficient_energy()).abs() <= 1e-12);
        for length in [500.0, 1000.0, 2000.0, 4000.0] {
            let defect = parseval_defect(&s, TimeWindow::from_origin(length).unwrap()).unwrap();
            let bound = square.mean_error_bound(length);
            prop_assert!(defect <= bound + QUADRATURE_TOL, "W = {length}: {defect} > {bound}");
        }
    }

    #[test]
    fn mean_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, f in signal(), g in signal()) {
        let combo = f.scaled(a).sum(&g.scaled(b));
        let exact = a * f.mean_value_exact() + b * g.mean_value_exact();
        prop_assert!((combo.mean_value_exact() - exact).abs() <= 1e-12 * (1.0 + exact.abs()));

        let w = TimeWindow::from_origin(300.0).unwrap();
        let step = 0.01;
        let m = |s: &ApSignal| mean_value_empirical(&s.sample(w, step), w).unwrap().value;
        let lhs = m(&combo);
        let rhs = a * m(&f) + b * m(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn signal_bounds_respect_the_coefficient_bounds(s in signal(), u in 0.0f64..1.0) {
        let b = s.signal_bounds(FORCING_GRID).unwrap();
        prop_assert!(b.sup_value <= s.coefficient_bound() + 1e-12);
        prop_assert!(b.inf_value >= s.offset() - s.amplitude_sum() - 1e-12);
        prop_assert!(b.inf_value <= s.mean_value_exact() && s.mean_value_exact() <= b.sup_value);
        let t = u * b.horizon;
        prop_assert!(s.evaluate(t) <= b.sup_value + 1e-9 && s.evaluate(t) >= b.inf_value - 1e-9);
    }

    /// If `φ̂ ≥ φ̌` and their means agree to within δ, the pointwise gap is of
    /// order δ: here `φ̂ − φ̌ = δ·g` with `0 ≤ g ≤ 2·M[g]`, so the sampled
    /// gap may not exceed twice the sampled mean gap.
    #[test]
    fn equal_means_force_small_gaps(
        base in signal(),
        g in signal(),
        delta in 1e-8f64..1e-2,
    ) {
        let lift = |s: &ApSignal| {
            let shift = s.amplitude_sum() - s.offset() + 0.1;
            s.sum(&ApSignal::constant(shift.max(0.0)))
        };
        let lower = lift(&base);
        let bump = ApSignal::new(g.amplitude_sum(), g.terms().to_vec()).unwrap().scaled(delta);
        let upper = lower.sum(&bump);

        let w = TimeWindow::from_origin(2000.0).unwrap();
        let step = lower.quadrature_step(DEFAULT_QUADRATURE_STEP).min(bump.quadrature_step(DEFAULT_QUADRATURE_STEP));
        let lo = lower.sample(w, step);
        let hi = upper.sample(w, step);
        let gap: Vec<f64> = hi.values.iter().zip(&lo.values).map(|(h, l)| h - l).collect();
        prop_assert!(lo.values.iter().all(|v| *v >= 0.0));
        prop_assert!(gap.iter().all(|d| *d >= -1e-15));

        let mean_gap = mean_value_empirical(&hi, w).unwrap().value - mean_value_empirical(&lo, w).unwrap().value;
        let max_gap = gap.iter().copied().fold(0.0, f64::max);
        let leak = bump.mean_error_bound(w.length());
        prop_assert!(max_gap <= 2.0 * (mean_gap + leak) + 1e-12, "max {max_gap}, mean {mean_gap}");
    }
}

#[test]
fn parseval_defect_shrinks_over_window_doublings() {
    let pi = std::f64::consts::PI;
    let fixed = [
        ApSignal::new(1.0, vec![Harmonic::new(1.0, 1.0, 0.0)]).unwrap(),
        ApSignal::new(1.0, vec![Harmonic::new(pi, 0.0, 1.0)]).unwrap(),
        ApSignal::new(
            0.5,
            vec![
                Harmonic::new(1.0, 1.0, 0.0),
                Harmonic::new(2f64.sqrt(), 0.0, 0.5),
            ],
        )
        .unwrap(),
    ];
    for s in &fixed {
        // Windows that are not multiples of any period, so the defect is
        // genuinely nonzero and decays.
        let defects: Vec<f64> = (0..5)
            .map(|k| {
                parseval_defect(s, TimeWindow::from_origin(101.3 * 2f64.powi(k)).unwrap()).unwrap()
            })
            .collect();
        let envelope: Vec<f64> = (0..defects.len())
            .map(|k| defects[k..].iter().copied().fold(0.0, f64::max))
            .collect();
        assert!(envelope.windows(2).all(|w| w[1] <= w[0]), "{defects:?}");
        assert!(
            defects[4] <= 0.1 * s.product(s).mean_error_bound(101.3) + QUADRATURE_TOL,
            "{defects:?}"
        );
    }
}

#[test]
fn sampled_signal_is_shift_consistent() {
    let s = ApSignal::new(1.0, vec![Harmonic::new(1.0, 1.0, 0.0)]).unwrap();
    let w = TimeWindow::new(-10.0, 10.0).unwrap();
    let direct = SampledSignal::from_fn(w, 0.01, |t| s.evaluate(t)).unwrap();
    assert_eq!(direct.values, s.sample(w, 0.01).values);
}
