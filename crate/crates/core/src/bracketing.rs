//! Constant sub/super-solutions and the invariant-region candidate `U`.
//!
//! With the order `−K = ℝ²_{≤0} × ℝ²_{≥0}` a constant sub-solution has the
//! shape `(ω_S, ω_I, 0, 0)` and a constant super-solution `(0, 0, Z_ES, Z_EI)`.
//! The closed-form vertices below are checked against the vector field
//! itself rather than against hand-expanded inequalities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::{EnzymeParams, State4, EI, ES, I, S};
use crate::monotonicity::{OrderRelation, OrthantOrder};

/// Inflow suprema entering the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InflowSups {
    pub sup_s: f64,
    pub sup_i: f64,
}

impl InflowSups {
    /// Suprema computed by `signal_bounds` on the model's inflows.
    pub fn computed(params: &EnzymeParams) -> Result<Self> {
        let (bs, bi) = params.inflow_bounds()?;
        Ok(Self {
            sup_s: bs.sup_value,
            sup_i: bi.sup_value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketPair {
    pub sub: State4,
    pub sup: State4,
}

impl BracketPair {
    /// `(ω⁰, 0⃗)` and `(0⃗, Z*)`.
    pub fn from_vertices(params: &EnzymeParams, sups: InflowSups) -> Self {
        let (ws, wi) = subsolution_vertex(params, sups);
        let (zs, zi) = supersolution_vertex(params);
        Self {
            sub: State4::new(ws, wi, 0.0, 0.0),
            sup: State4::new(0.0, 0.0, zs, zi),
        }
    }

    /// Relation of `sub` to `sup` in the enzyme order.
    pub fn relation(&self) -> OrderRelation {
        OrthantOrder::enzyme()
            .compare(&self.sub.to_array(), &self.sup.to_array())
            .expect("four coordinates")
    }
}

/// The region `U = [0, ω*_S] × [0, ω*_I] × [0, z_cap]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionU {
    pub omega_star_s: f64,
    pub omega_star_i: f64,
    pub z_cap: f64,
}

impl RegionU {
    pub fn upper(&self) -> State4 {
        State4::new(self.omega_star_s, self.omega_star_i, self.z_cap, self.z_cap)
    }

    /// Largest distance by which `x` lies outside `U` (0 inside).
    pub fn excess(&self, x: &State4) -> f64 {
        let hi = self.upper().to_array();
        x.to_array()
            .iter()
            .zip(hi)
            .map(|(v, h)| (-v).max(v - h).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &State4, tolerance: f64) -> bool {
        self.excess(x) <= tolerance
    }
}

/// `ω⁰_S = F_S*/(ξ_S + k₁T)` and `ω⁰_I = F_I*/(ξ_I + k₅T)`.
pub fn subsolution_vertex(params: &EnzymeParams, sups: InflowSups) -> (f64, f64) {
    let t = params.total_enzyme;
    (
        sups.sup_s / (params.xi_s + params.k1 * t),
        sups.sup_i / (params.xi_i + params.k5 * t),
    )
}

/// `Z* = (T/2, T/2)`, the corner of `[0, T/2]²` opposite the origin.
pub fn supersolution_vertex(params: &EnzymeParams) -> (f64, f64) {
    let half = 0.5 * params.total_enzyme;
    (half, half)
}

/// `ω*_S = (T k₂ + F_S*)/ξ_S`, `ω*_I = (T k₄ + F_I*)/ξ_I`, caps `T/2`.
pub fn attractor_bounds(params: &EnzymeParams, sups: InflowSups) -> RegionU {
    let t = params.total_enzyme;
    RegionU {
        omega_star_s: (t * params.k2 + sups.sup_s) / params.xi_s,
        omega_star_i: (t * params.k4 + sups.sup_i) / params.xi_i,
        z_cap: 0.5 * t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BracketKind {
    Sub,
    Super,
}

impl BracketKind {
    /// Sign turning `V_σ` into a margin that must be nonnegative: a constant
    /// sub-solution needs `V_S, V_I ≤ 0` and `V_ES, V_EI ≥ 0`; a
    /// super-solution the reverse.
    fn sign(self, component: usize) -> f64 {
        let outer = matches!(component, S | I);
        match (self, outer) {
            (BracketKind::Sub, true) | (BracketKind::Super, false) => -1.0,
            _ => 1.0,
        }
    }
}

/// Rounding allowance on the residual margins: the sub-solution vertex
/// makes `V_S`, `V_I` vanish exactly at the forcing maxima, where the
/// evaluated margin is `0` only up to a few ulps.
pub const RESIDUAL_TOLERANCE: f64 = 1.0e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub kind: BracketKind,
    pub candidate: State4,
    /// Worst signed margin per component over the grid.
    pub worst_margin: [f64; 4],
    pub worst_time: [f64; 4],
    pub passed: bool,
}

/// Checks the constant `candidate` against the differential inequalities
/// defining a `(−K)` sub- or super-solution on every grid time.
pub fn verify_subsupersolution(
    params: &EnzymeParams,
    candidate: State4,
    kind: BracketKind,
    time_grid: &[f64],
) -> ResidualReport {
    let mut worst = [f64::INFINITY; 4];
    let mut worst_time = [f64::NAN; 4];
    for &t in time_grid {
        let v = params.vector_field(t, &candidate).to_array();
        for c in 0..4 {
            let m = kind.sign(c) * v[c];
            if m < worst[c] {
                worst[c] = m;
                worst_time[c] = t;
            }
        }
    }
    ResidualReport {
        kind,
        candidate,
        worst_margin: worst,
        worst_time,
        passed: worst.iter().all(|m| *m >= -RESIDUAL_TOLERANCE),
    }
}

/// The faces of `U` examined for inward pointing. `C1`–`C6` carry the
/// closed-form bounds; `C7`, `C8` are the lower faces of the enzyme
/// complexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Face {
    /// `c_ES > z_cap`: claim `ċ_ES ≤ −(k₂+k₃) c_ES`.
    C1,
    /// `c_EI > z_cap`: claim `ċ_EI ≤ −k₄ c_EI`.
    C2,
    /// `c_S < 0`: claim `ċ_S > k₂ c_ES + F_S ≥ 0`.
    C3,
    /// `c_I < 0`: claim `ċ_I > k₄ c_EI + F_I ≥ 0`.
    C4,
    /// `c_S > ω*_S`: claim `ċ_S ≤ −k₂T/2`.
    C5,
    /// `c_I > ω*_I`: claim `ċ_I ≤ −k₄T/2`.
    C6,
    /// `c_ES < 0`: claim `ċ_ES > 0`.
    C7,
    /// `c_EI < 0`: claim `ċ_EI > 0`.
    C8,
}

impl Face {
    pub const ALL: [Face; 8] = [
        Face::C1,
        Face::C2,
        Face::C3,
        Face::C4,
        Face::C5,
        Face::C6,
        Face::C7,
        Face::C8,
    ];

    /// Coordinate pushed outside `U` and whether it exits through the top.
    fn coordinate(self) -> (usize, bool) {
        match self {
            Face::C1 => (ES, true),
            Face::C2 => (EI, true),
            Face::C3 => (S, false),
            Face::C4 => (I, false),
            Face::C5 => (S, true),
            Face::C6 => (I, true),
            Face::C7 => (ES, false),
            Face::C8 => (EI, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceCheck {
    pub face: Face,
    pub component: usize,
    /// `max (ċ_σ − bound)` over samples for upper faces, `min` for lower
    /// faces; the claim holds iff this is `≤ 0` (upper) or `> 0` (lower).
    pub worst_slack: f64,
    /// Largest (upper faces) or smallest (lower faces) derivative seen.
    pub extreme_derivative: f64,
    /// Closed-form constant bound on the derivative where one exists
    /// (`−k₂T/2` on C5, `−k₄T/2` on C6).
    pub analytic_bound: Option<f64>,
    pub witness: State4,
    pub witness_time: f64,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceReport {
    pub region: RegionU,
    pub offset: f64,
    pub faces: Vec<FaceCheck>,
}

impl FaceReport {
    pub fn all_passed(&self) -> bool {
        self.faces.iter().all(|f| f.passed)
    }

    pub fn face(&self, face: Face) -> &FaceCheck {
        self.faces
            .iter()
            .find(|f| f.face == face)
            .expect("all faces checked")
    }
}

/// Distance outside `U` at which face samples are taken.
pub const FACE_OFFSET: f64 = 1.0e-9;

/// Samples every face of `U` just outside the region (a regular grid of
/// `samples_per_axis` points along each free coordinate) at every time in
/// `time_grid`, and evaluates the face's claimed inequality.
pub fn check_inward_faces(
    params: &EnzymeParams,
    region: &RegionU,
    time_grid: &[f64],
    samples_per_axis: usize,
) -> FaceReport {
    let hi = region.upper().to_array();
    let n = samples_per_axis.max(2);
    let (k2, k3, k4, t_total) = (params.k2, params.k3, params.k4, params.total_enzyme);
    let faces = Face::ALL
        .par_iter()
        .map(|&face| {
            let (coord, top) = face.coordinate();
            let free: Vec<usize> = (0..4).filter(|&c| c != coord).collect();
            let mut worst_slack = if top {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            let mut extreme = worst_slack;
            let mut witness = State4::default();
            let mut witness_time = 0.0;
            let mut samples = 0;
            for idx in 0..n.pow(3) {
                let mut x = [0.0; 4];
                let mut rem = idx;
                for &c in &free {
                    let j = rem % n;
                    rem /= n;
                    x[c] = hi[c] * j as f64 / (n - 1) as f64;
                }
                x[coord] = if top {
                    hi[coord] + FACE_OFFSET
                } else {
                    -FACE_OFFSET
                };
                let st = State4::from_array(x);
                for &t in time_grid {
                    let d = params.vector_field(t, &st).to_array()[coord];
                    let bound = match face {
                        Face::C1 => -(k2 + k3) * x[ES],
                        Face::C2 => -k4 * x[EI],
                        Face::C3 => k2 * x[ES] + params.inflow_s.evaluate(t),
                        Face::C4 => k4 * x[EI] + params.inflow_i.evaluate(t),
                        Face::C5 => -k2 * t_total / 2.0,
                        Face::C6 => -k4 * t_total / 2.0,
                        Face::C7 | Face::C8 => 0.0,
                    };
                    let slack = d - bound;
                    samples += 1;
                    let worse = if top {
                        slack > worst_slack
                    } else {
                        slack < worst_slack
                    };
                    if worse {
                        worst_slack = slack;
                        witness = st;
                        witness_time = t;
                    }
                    extreme = if top { extreme.max(d) } else { extreme.min(d) };
                }
            }
            let passed = if top {
                worst_slack <= 0.0
            } else {
                worst_slack > 0.0
            };
            FaceCheck {
                face,
                component: coord,
                worst_slack,
                extreme_derivative: extreme,
                analytic_bound: match face {
                    Face::C5 => Some(-k2 * t_total / 2.0),
                    Face::C6 => Some(-k4 * t_total / 2.0),
                    _ => None,
                },
                witness,
                witness_time,
                samples,
                passed,
            }
        })
        .collect();
    FaceReport {
        region: *region,
        offset: FACE_OFFSET,
        faces,
    }
}

/// Everything the `brackets` subcommand reports, for both the computed
/// inflow suprema and (optionally) separately stated ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketSummary {
    pub sups: InflowSups,
    pub omega0: (f64, f64),
    pub z_star: (f64, f64),
    pub region: RegionU,
    pub pair: BracketPair,
    pub pair_relation: OrderRelation,
    pub sub_check: ResidualReport,
    pub super_check: ResidualReport,
    pub faces: FaceReport,
}

pub fn summarize(
    params: &EnzymeParams,
    sups: InflowSups,
    time_grid: &[f64],
    face_time_grid: &[f64],
    samples_per_axis: usize,
) -> BracketSummary {
    let pair = BracketPair::from_vertices(params, sups);
    let region = attractor_bounds(params, sups);
    BracketSummary {
        sups,
        omega0: subsolution_vertex(params, sups),
        z_star: supersolution_vertex(params),
        region,
        pair,
        pair_relation: pair.relation(),
        sub_check: verify_subsupersolution(params, pair.sub, BracketKind::Sub, time_grid),
        super_check: verify_subsupersolution(params, pair.sup, BracketKind::Super, time_grid),
        faces: check_inward_faces(params, &region, face_time_grid, samples_per_axis),
    }
}

/// Uniform grid `start, start + step, …, end`.
pub fn time_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}
