use apzyme::integrate::{simulate, simulate_lifted};
use apzyme::model::{EnzymeParams, State4};
use apzyme::ode::StepControl;
use proptest::prelude::*;

/// Central-difference step; with O(1) states the truncation error is
/// O(h²) ≈ 1e-12 and round-off O(ε/h) ≈ 1e-10, both far inside 1e-5.
const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;

const RTOL: f64 = 1e-9;

/// State in the stoichiometric region `[0,3]² × {c_ES, c_EI ≥ 0, c_ES + c_EI ≤ T}`.
fn state(total: f64) -> impl Strategy<Value = State4> {
    (0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(move |(s, i, a, b)| {
        // Map the unit square onto the triangle c_ES + c_EI ≤ T.
        let (a, b) = if a + b > 1.0 {
            (1.0 - a, 1.0 - b)
        } else {
            (a, b)
        };
        State4::new(s, i, a * total, b * total)
    })
}

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

fn control() -> StepControl {
    StepControl {
        rtol: RTOL,
        ..StepControl::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobian_matches_finite_differences(p in params(), x in state(1.0), t in 0.0f64..10.0) {
        let x = State4::new(x.c_s, x.c_i, x.c_es * p.total_enzyme, x.c_ei * p.total_enzyme);
        let j = p.jacobian(&x);
        for col in 0..4 {
            let mut plus = x.to_array();
            let mut minus = x.to_array();
            plus[col] += FD_STEP;
            minus[col] -= FD_STEP;
            let fp = p.vector_field(t, &State4::from_array(plus)).to_array();
            let fm = p.vector_field(t, &State4::from_array(minus)).to_array();
            for row in 0..4 {
                let fd = (fp[row] - fm[row]) / (2.0 * FD_STEP);
                let err = (j[row][col] - fd).abs();
                prop_assert!(
                    err <= FD_REL_TOL * j[row][col].abs().max(1.0),
                    "entry ({row}, {col}): analytic {} vs {fd}", j[row][col]
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lifted_system_conserves_enzyme_and_matches_the_reduced_flow(x in state(1.0)) {
        let p = EnzymeParams::benchmark();
        let horizon = 100.0;
        let lifted = simulate_lifted(&p, p.lift(&x, 0.0), 0.0, horizon, &control()).unwrap();
        let defect = lifted.max_conservation_defect(p.total_enzyme);
        prop_assert!(defect < 10.0 * RTOL, "conservation defect {defect}");

        let reduced = simulate(&p, x, 0.0, horizon, &control()).unwrap();
        prop_assert_eq!(&lifted.times, &reduced.times);
        let worst = lifted
            .states
            .iter()
            .zip(&reduced.states)
            .map(|(l, r)| {
                let back = p.reduce(l, 1e-6).unwrap().to_array();
                back.iter().zip(r.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // Two independent adaptive runs at rtol 1e-9 on a contracting system.
        prop_assert!(worst < 1e-6, "lifted vs reduced differ by {worst}");
    }

    #[test]
    fn nonnegative_orthant_and_enzyme_cap_are_forward_invariant(
        x in state(1.0),
        f_s in 0.0f64..3.0,
        f_i in 0.0f64..3.0,
    ) {
        for p in [EnzymeParams::benchmark(), EnzymeParams::benchmark().with_constant_inflows(f_s, f_i)] {
            let run = simulate(&p, x, 0.0, 60.0, &control()).unwrap();
            let floor = -10.0 * control().atol;
            for s in &run.states {
                prop_assert!(s.min_component() >= floor, "{s:?}");
                prop_assert!(s.c_es + s.c_ei <= p.total_enzyme + 10.0 * RTOL, "{s:?}");
            }
        }
    }
}
