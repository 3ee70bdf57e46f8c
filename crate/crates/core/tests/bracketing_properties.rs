use apzyme::bracketing::{attractor_bounds, subsolution_vertex, BracketPair, InflowSups, RegionU};
use apzyme::integrate::simulate;
use apzyme::model::{EnzymeParams, State4};
use apzyme::monotonicity::{order_leq, OrderRelation, OrthantOrder};
use apzyme::ode::StepControl;
use proptest::prelude::*;

/// Excursion outside `U` tolerated along a trajectory: a few integrator
/// tolerances, far below any genuine exit.
const REGION_TOL: f64 = 1e-8;

fn params() -> impl Strategy<Value = EnzymeParams> {
    (
        prop::array::uniform5(0.1f64..2.0),
        0.2f64..2.0,
        0.2f64..2.0,
        0.5f64..2.0,
    )
        .prop_map(|(k, xi_s, xi_i, t)| EnzymeParams {
            k1: k[0],
            k2: k[1],
            k3: k[2],
            k4: k[3],
            k5: k[4],
            xi_s,
            xi_i,
            total_enzyme: t,
            ..EnzymeParams::benchmark()
        })
}

fn sups() -> impl Strategy<Value = InflowSups> {
    (0.1f64..4.0, 0.1f64..4.0).prop_map(|(sup_s, sup_i)| InflowSups { sup_s, sup_i })
}

fn control() -> StepControl {
    StepControl {
        rtol: 1e-9,
        ..StepControl::default()
    }
}

/// First time from which the trajectory stays in `U`, if it does.
fn entry_time(region: &RegionU, times: &[f64], states: &[State4]) -> Option<f64> {
    let last_outside = states.iter().rposition(|s| !region.contains(s, REGION_TOL));
    match last_outside {
        None => Some(times[0]),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The supersolution state lies below the subsolution state in the
    /// enzyme order `ε = (−,−,+,+)`: larger complexes, smaller S and I.
    #[test]
    fn bracket_vertices_are_strictly_ordered(p in params(), s in sups()) {
        let pair = BracketPair::from_vertices(&p, s);
        let order = OrthantOrder::enzyme();
        prop_assert_eq!(
            order_leq(&pair.sub.to_array(), &pair.sup.to_array(), &order).unwrap(),
            OrderRelation::StrictAll
        );
        prop_assert_eq!(pair.relation(), OrderRelation::StrictAll);
    }

    #[test]
    fn subsolution_vertex_depends_monotonically_on_the_data(
        p in params(),
        s in sups(),
        bump in 0.01f64..0.5,
    ) {
        let base = subsolution_vertex(&p, s).0;
        let more_enzyme = EnzymeParams { total_enzyme: p.total_enzyme + bump, ..p.clone() };
        let more_outflow = EnzymeParams { xi_s: p.xi_s + bump, ..p.clone() };
        let more_inflow = InflowSups { sup_s: s.sup_s + bump, ..s };
        prop_assert!(subsolution_vertex(&more_enzyme, s).0 <= base);
        prop_assert!(subsolution_vertex(&more_outflow, s).0 <= base);
        prop_assert!(subsolution_vertex(&p, more_inflow).0 >= base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Started anywhere in `ℝ⁴_{≥0}` with `c_ES + c_EI ≤ 2T`, benchmark
    /// trajectories enter `U` and stay there.
    #[test]
    fn trajectories_enter_u(
        s in 0.0f64..6.0,
        i in 0.0f64..6.0,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let p = EnzymeParams::benchmark();
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        let x0 = State4::new(s, i, 2.0 * p.total_enzyme * a, 2.0 * p.total_enzyme * b);
        let region = attractor_bounds(&p, InflowSups::computed(&p).unwrap());
        let run = simulate(&p, x0, 0.0, 200.0, &control()).unwrap();
        let entered = entry_time(&region, &run.times, &run.states);
        prop_assert!(entered.is_some_and(|t| t < 100.0), "x0 = {x0:?}, entered at {entered:?}");
    }
}

/// Positive invariance of `U = [0, ω*_S] × [0, ω*_I] × [0, T/2]²`: every
/// trajectory started on a grid of `U` must stay inside it. At the benchmark
/// the corner `(ω*_S, 0, T/2, 0)` has `ċ_ES = k₁(T/2)ω*_S − (k₂+k₃)T/2 > 0`,
/// so this property does not hold; the test reports the first exit.
#[test]
fn trajectories_started_in_u_remain_in_u() {
    let p = EnzymeParams::benchmark();
    let region = attractor_bounds(&p, InflowSups::computed(&p).unwrap());
    let hi = region.upper().to_array();
    let n: usize = 3;
    let mut exits = Vec::new();
    for idx in 0..n * n * n * n {
        let mut x = [0.0; 4];
        let mut rem = idx;
        for (c, xc) in x.iter_mut().enumerate() {
            *xc = hi[c] * (rem % n) as f64 / (n - 1) as f64;
            rem /= n;
        }
        let run = simulate(&p, State4::from_array(x), 0.0, 50.0, &control()).unwrap();
        if let Some(k) = run
            .states
            .iter()
            .position(|s| !region.contains(s, REGION_TOL))
        {
            exits.push((x, run.times[k], region.excess(&run.states[k])));
        }
    }
    assert!(
        exits.is_empty(),
        "{} of {} grid starts leave U; first: start {:?} at t = {}, excess {:.3e}",
        exits.len(),
        n.pow(4),
        exits[0].0,
        exits[0].1,
        exits[0].2
    );
}
