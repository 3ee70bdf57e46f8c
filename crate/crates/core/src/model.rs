//! The open enzyme-catalysis-with-inhibitor network
//!
//! ```text
//! E + S <-> ES -> E + P      (k1 forward, k2 back, k3 catalysis)
//! E + I <-> EI               (k5 forward, k4 back)
//! 0 -> S, 0 -> I             (inflows F_S(t), F_I(t))
//! S -> 0, I -> 0             (decay ξ_S, ξ_I)
//! ```
//!
//! under mass action. The enzyme total `c_E + c_ES + c_EI = T` is conserved,
//! so the dynamics reduce to four coordinates `(c_S, c_I, c_ES, c_EI)`; the
//! product `c_P` only accumulates `k3·c_ES` and can be tracked on the side.

use serde::{Deserialize, Serialize};

use crate::apsignal::{ApSignal, Harmonic, SignalBounds};
use crate::error::{Error, Result};
use crate::ode::OdeSystem;

pub const S: usize = 0;
pub const I: usize = 1;
pub const ES: usize = 2;
pub const EI: usize = 3;

pub const SPECIES: [&str; 4] = ["c_S", "c_I", "c_ES", "c_EI"];

/// Grid resolution used when the model needs sup/inf of its inflows.
pub const FORCING_GRID: f64 = 1.0e-3;

/// Rate constants, decay rates, enzyme total and inflow signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnzymeParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub xi_s: f64,
    pub xi_i: f64,
    pub total_enzyme: f64,
    pub inflow_s: ApSignal,
    pub inflow_i: ApSignal,
}

impl EnzymeParams {
    /// The benchmark experiment: `F_S = 1 + cos t`, `F_I = 1 + sin πt`,
    /// `ξ_S = ξ_I = 1`, `T = 1` and `k = (0.95, 0.3, 0.9, 0.8, 0.3)`.
    pub fn benchmark() -> Self {
        Self {
            k1: 0.95,
            k2: 0.3,
            k3: 0.9,
            k4: 0.8,
            k5: 0.3,
            xi_s: 1.0,
            xi_i: 1.0,
            total_enzyme: 1.0,
            inflow_s: ApSignal::new(1.0, vec![Harmonic::new(1.0, 1.0, 0.0)]).expect("valid signal"),
            inflow_i: ApSignal::new(1.0, vec![Harmonic::new(std::f64::consts::PI, 0.0, 1.0)])
                .expect("valid signal"),
        }
    }

    pub fn with_constant_inflows(mut self, f_s: f64, f_i: f64) -> Self {
        self.inflow_s = ApSignal::constant(f_s);
        self.inflow_i = ApSignal::constant(f_i);
        self
    }

    /// Positivity of every constant and nonnegativity of both inflows.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k5", self.k5),
            ("xi_s", self.xi_s),
            ("xi_i", self.xi_i),
            ("total_enzyme", self.total_enzyme),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be finite and > 0")));
            }
        }
        for (name, signal) in [("inflow_s", &self.inflow_s), ("inflow_i", &self.inflow_i)] {
            let b = signal.signal_bounds(FORCING_GRID)?;
            if b.inf_value < -1.0e-12 {
                return Err(Error::param(
                    name,
                    format!("inflow must be nonnegative, infimum is {}", b.inf_value),
                ));
            }
        }
        Ok(())
    }

    pub fn inflow_bounds(&self) -> Result<(SignalBounds, SignalBounds)> {
        Ok((
            self.inflow_s.signal_bounds(FORCING_GRID)?,
            self.inflow_i.signal_bounds(FORCING_GRID)?,
        ))
    }

    /// Whether the inflows meet the main theorem's hypothesis: continuous,
    /// non-constant and strictly positive.
    pub fn forcing_hypothesis(&self) -> Result<ForcingHypothesis> {
        let (bs, bi) = self.inflow_bounds()?;
        Ok(ForcingHypothesis {
            inflow_s_inf: bs.inf_value,
            inflow_i_inf: bi.inf_value,
            non_constant: !self.inflow_s.is_constant() && !self.inflow_i.is_constant(),
            strictly_positive: bs.inf_value > 0.0 && bi.inf_value > 0.0,
        })
    }

    /// Free enzyme `c_E = T − c_ES − c_EI`.
    pub fn free_enzyme(&self, x: &State4) -> f64 {
        self.total_enzyme - x.c_es - x.c_ei
    }

    /// The reduced vector field `V(c, F(t))`.
    pub fn vector_field(&self, t: f64, x: &State4) -> State4 {
        let e = self.free_enzyme(x);
        let bind_s = self.k1 * e * x.c_s;
        let bind_i = self.k5 * e * x.c_i;
        State4 {
            c_s: -bind_s + self.k2 * x.c_es + self.inflow_s.evaluate(t) - self.xi_s * x.c_s,
            c_i: -bind_i + self.k4 * x.c_ei + self.inflow_i.evaluate(t) - self.xi_i * x.c_i,
            c_es: bind_s - (self.k2 + self.k3) * x.c_es,
            c_ei: bind_i - self.k4 * x.c_ei,
        }
    }

    /// `∂V/∂t`: only the inflows depend on time.
    pub fn time_derivative(&self, t: f64) -> State4 {
        State4::new(
            self.inflow_s.derivative(t),
            self.inflow_i.derivative(t),
            0.0,
            0.0,
        )
    }

    /// Analytic Jacobian `DV` (independent of `t` since forcing is additive).
    pub fn jacobian(&self, x: &State4) -> [[f64; 4]; 4] {
        let (k1, k2, k3, k4, k5) = (self.k1, self.k2, self.k3, self.k4, self.k5);
        let e = self.free_enzyme(x);
        [
            [-k1 * e - self.xi_s, 0.0, k1 * x.c_s + k2, k1 * x.c_s],
            [0.0, -k5 * e - self.xi_i, k5 * x.c_i, k4 + k5 * x.c_i],
            [k1 * e, 0.0, -k1 * x.c_s - k2 - k3, -k1 * x.c_s],
            [0.0, k5 * e, -k5 * x.c_i, -k4 - k5 * x.c_i],
        ]
    }

    pub fn product_rate(&self, x: &State4) -> f64 {
        self.k3 * x.c_es
    }

    pub fn lift(&self, x: &State4, c_p: f64) -> State6 {
        State6 {
            c_s: x.c_s,
            c_i: x.c_i,
            c_e: self.free_enzyme(x),
            c_es: x.c_es,
            c_ei: x.c_ei,
            c_p,
        }
    }

    /// Drops `c_E` and `c_P`, refusing states off the conservation law by
    /// more than `tolerance`.
    pub fn reduce(&self, x: &State6, tolerance: f64) -> Result<State4> {
        let defect = x.conservation_defect(self.total_enzyme);
        if defect.abs() > tolerance {
            return Err(Error::ConservationViolated { defect });
        }
        Ok(State4::new(x.c_s, x.c_i, x.c_es, x.c_ei))
    }

    /// Unreduced right-hand side over `(c_S, c_I, c_E, c_ES, c_EI, c_P)`.
    pub fn full_vector_field(&self, t: f64, x: &State6) -> State6 {
        let bind_s = self.k1 * x.c_e * x.c_s;
        let bind_i = self.k5 * x.c_e * x.c_i;
        State6 {
            c_s: self.k2 * x.c_es - bind_s + self.inflow_s.evaluate(t) - self.xi_s * x.c_s,
            c_i: self.k4 * x.c_ei - bind_i + self.inflow_i.evaluate(t) - self.xi_i * x.c_i,
            c_e: self.k2 * x.c_es - bind_s + self.k4 * x.c_ei - bind_i + self.k3 * x.c_es,
            c_es: bind_s - self.k2 * x.c_es - self.k3 * x.c_es,
            c_ei: bind_i - self.k4 * x.c_ei,
            c_p: self.k3 * x.c_es,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcingHypothesis {
    pub inflow_s_inf: f64,
    pub inflow_i_inf: f64,
    pub non_constant: bool,
    pub strictly_positive: bool,
}

/// Reduced state on the stoichiometric region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State4 {
    pub c_s: f64,
    pub c_i: f64,
    pub c_es: f64,
    pub c_ei: f64,
}

impl State4 {
    pub const fn new(c_s: f64, c_i: f64, c_es: f64, c_ei: f64) -> Self {
        Self {
            c_s,
            c_i,
            c_es,
            c_ei,
        }
    }

    pub const fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.c_s, self.c_i, self.c_es, self.c_ei]
    }

    pub fn min_component(&self) -> f64 {
        self.to_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Signed distance into the region `ℝ⁴_{≥0} ∩ {c_ES + c_EI ≤ T}`;
    /// negative values measure how far outside the state is.
    pub fn region_margin(&self, total_enzyme: f64) -> f64 {
        self.min_component()
            .min(total_enzyme - self.c_es - self.c_ei)
    }
}

/// Unreduced state including free enzyme and accumulated product.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State6 {
    pub c_s: f64,
    pub c_i: f64,
    pub c_e: f64,
    pub c_es: f64,
    pub c_ei: f64,
    pub c_p: f64,
}

impl State6 {
    pub const fn from_array(a: [f64; 6]) -> Self {
        Self {
            c_s: a[0],
            c_i: a[1],
            c_e: a[2],
            c_es: a[3],
            c_ei: a[4],
            c_p: a[5],
        }
    }

    pub const fn to_array(self) -> [f64; 6] {
        [self.c_s, self.c_i, self.c_e, self.c_es, self.c_ei, self.c_p]
    }

    pub fn conservation_defect(&self, total_enzyme: f64) -> f64 {
        self.c_e + self.c_es + self.c_ei - total_enzyme
    }
}

/// The reduced field as an ODE system.
pub struct Reduced<'a>(pub &'a EnzymeParams);

impl OdeSystem<4> for Reduced<'_> {
    fn rhs(&self, t: f64, x: &[f64; 4]) -> [f64; 4] {
        self.0.vector_field(t, &State4::from_array(*x)).to_array()
    }
}

/// Reduced field plus the product accumulator as a fifth coordinate.
pub struct ReducedWithProduct<'a>(pub &'a EnzymeParams);

impl OdeSystem<5> for ReducedWithProduct<'_> {
    fn rhs(&self, t: f64, x: &[f64; 5]) -> [f64; 5] {
        let s = State4::new(x[0], x[1], x[2], x[3]);
        let v = self.0.vector_field(t, &s);
        [v.c_s, v.c_i, v.c_es, v.c_ei, self.0.product_rate(&s)]
    }
}

/// The unreduced six-species system.
pub struct Lifted<'a>(pub &'a EnzymeParams);

impl OdeSystem<6> for Lifted<'_> {
    fn rhs(&self, t: f64, x: &[f64; 6]) -> [f64; 6] {
        self.0
            .full_vector_field(t, &State6::from_array(*x))
            .to_array()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forced(a: f64, b: f64) -> EnzymeParams {
        EnzymeParams::benchmark().with_constant_inflows(a, b)
    }

    #[test]
    fn origin_sees_only_inflow() {
        let p = forced(0.7, 1.3);
        let v = p.vector_field(0.0, &State4::default());
        assert_eq!(v, State4::new(0.7, 1.3, 0.0, 0.0));
    }

    #[test]
    fn depleted_enzyme_face_kills_binding() {
        let p = EnzymeParams::benchmark();
        let x = State4::new(2.3, 0.4, 0.6, 0.4);
        let v = p.vector_field(1.0, &x);
        assert!((v.c_es + (p.k2 + p.k3) * x.c_es).abs() < 1e-15);
    }

    #[test]
    fn benchmark_point_matches_hand_substitution() {
        // F_S(0) = 2, F_I(0) = 1, c_E = 1 - 0.25 - 0.25 = 0.5
        // ċ_S  = -0.95·0.5·1 + 0.3·0.25 + 2 - 1 = 0.6
        // ċ_I  = -0.3·0.5·1 + 0.8·0.25 + 1 - 1 = 0.05
        // ċ_ES =  0.95·0.5·1 - 1.2·0.25       = 0.175
        // ċ_EI =  0.3·0.5·1 - 0.8·0.25        = -0.05
        let p = EnzymeParams::benchmark();
        let v = p.vector_field(0.0, &State4::new(1.0, 1.0, 0.25, 0.25));
        let expect = [0.6, 0.05, 0.175, -0.05];
        for (got, want) in v.to_array().iter().zip(expect) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn jacobian_reads_off_at_origin_and_face() {
        let p = EnzymeParams::benchmark();
        let j = p.jacobian(&State4::default());
        assert_eq!(j[ES][S], p.k1 * p.total_enzyme);
        assert_eq!(j[S][ES], p.k2);
        let face = p.jacobian(&State4::new(1.0, 1.0, 0.3, 0.7));
        assert!((face[S][S] + p.xi_s).abs() < 1e-15);
    }

    #[test]
    fn lift_and_reduce() {
        let p = EnzymeParams::benchmark();
        let x = State4::new(1.0, 1.0, 0.25, 0.25);
        let l = p.lift(&x, 0.0);
        assert_eq!(l.c_e, 0.5);
        assert_eq!(p.reduce(&l, 1e-12).unwrap(), x);
        let bad = State6 {
            c_e: l.c_e + 0.1,
            ..l
        };
        match p.reduce(&bad, 1e-6) {
            Err(Error::ConservationViolated { defect }) => assert!((defect - 0.1).abs() < 1e-12),
            other => panic!("expected conservation error, got {other:?}"),
        }
    }

    #[test]
    fn product_rate_examples() {
        let p = EnzymeParams::benchmark();
        assert_eq!(p.product_rate(&State4::default()), 0.0);
        assert!((p.product_rate(&State4::new(0.0, 0.0, 0.5, 0.0)) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn full_field_reduces_to_reduced_field() {
        let p = EnzymeParams::benchmark();
        let x = State4::new(0.8, 1.9, 0.1, 0.35);
        let full = p.full_vector_field(2.5, &p.lift(&x, 3.0));
        let red = p.vector_field(2.5, &x);
        assert!((full.c_s - red.c_s).abs() < 1e-15);
        assert!((full.c_i - red.c_i).abs() < 1e-15);
        assert!((full.c_es - red.c_es).abs() < 1e-15);
        assert!((full.c_ei - red.c_ei).abs() < 1e-15);
        assert!((full.c_e + full.c_es + full.c_ei).abs() < 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let p = EnzymeParams {
            k1: -1.0,
            ..EnzymeParams::benchmark()
        };
        match p.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "k1"),
            other => panic!("{other:?}"),
        }
        let p = forced(-0.5, 1.0);
        assert!(p.validate().is_err());
        assert!(EnzymeParams::benchmark().validate().is_ok());
    }

    #[test]
    fn benchmark_forcing_is_not_strictly_positive() {
        let h = EnzymeParams::benchmark().forcing_hypothesis().unwrap();
        assert!(h.non_constant);
        assert!(!h.strictly_positive);
        assert!(h.inflow_s_inf.abs() < 1e-6);
    }
}
