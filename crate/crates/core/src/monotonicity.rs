//! Orthant orders and sign-pattern certification of Jacobian fields.
//!
//! An [`OrthantOrder`] is a sign vector `ε ∈ {±1}^d`; `u ⪯ v` iff
//! `ε_h (v_h − u_h) ≥ 0` for every `h`. A Jacobian field is certified against
//! a [`SignPattern`] derived from the order: off-diagonal entries only for
//! plain monotonicity, every entry (diagonal included) for intraspecific
//! monotonicity.
//!
//! Points are drawn from a Halton sequence over the box, filtered by the
//! linear caps, and always supplemented by the vertices of the feasible
//! polytope. When the field declares its entries affine in the state, the
//! vertex minima are exact and the flags come from them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EnzymeParams, State4};

/// Default number of low-discrepancy samples.
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

/// Maximum number of violation witnesses kept in a report.
pub const MAX_WITNESSES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrthantOrder {
    signs: Vec<i8>,
}

impl OrthantOrder {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::param(
                "signs",
                "orthant needs at least one coordinate",
            ));
        }
        if let Some(s) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::param("signs", format!("entry {s} is not ±1")));
        }
        Ok(Self { signs })
    }

    /// The order `−K = ℝ²_{≤0} × ℝ²_{≥0}` used for the enzyme system.
    pub fn enzyme() -> Self {
        Self {
            signs: vec![-1, -1, 1, 1],
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn sign(&self, h: usize) -> f64 {
        f64::from(self.signs[h])
    }

    pub fn reversed(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }

    /// Classifies `v − u` against the cone.
    pub fn compare(&self, u: &[f64], v: &[f64]) -> Result<OrderRelation> {
        self.check_dim(u.len())?;
        self.check_dim(v.len())?;
        let mut strict = 0;
        for (h, (a, b)) in u.iter().zip(v).enumerate() {
            let d = self.sign(h) * (b - a);
            if d < 0.0 {
                return Ok(OrderRelation::Incomparable);
            }
            if d > 0.0 {
                strict += 1;
            }
        }
        Ok(match strict {
            0 => OrderRelation::Leq,
            n if n == self.dim() => OrderRelation::StrictAll,
            _ => OrderRelation::StrictSome,
        })
    }

    /// `max_h max(0, −ε_h (v_h − u_h))`: zero iff `u ⪯ v`.
    pub fn defect(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(h, (a, b))| -self.sign(h) * (b - a))
            .fold(0.0, f64::max)
    }

    /// Smallest signed gap `min_h ε_h (v_h − u_h)`; positive iff `u ≺≺ v`.
    pub fn margin(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(h, (a, b))| self.sign(h) * (b - a))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of [`OrthantOrder::compare`]: `u ⪯ v`, `u ≺ v`, `u ≺≺ v` or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrderRelation {
    Leq,
    StrictSome,
    StrictAll,
    Incomparable,
}

impl OrderRelation {
    pub fn is_leq(self) -> bool {
        !matches!(self, OrderRelation::Incomparable)
    }
}

pub fn order_leq(u: &[f64], v: &[f64], order: &OrthantOrder) -> Result<OrderRelation> {
    order.compare(u, v)
}

/// How an order turns into required Jacobian signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `ε_i ε_j J_ij ≥ 0`: the classical Kamke condition for the flow to
    /// preserve the order.
    Kamke,
    /// `−ε_i ε_j J_ij ≥ 0`: the signed pattern the enzyme Jacobian displays
    /// under `−K` (cross blocks `+`, same-block entries `−`).
    #[default]
    ReversedCone,
}

/// Required sign of every Jacobian entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPattern {
    dim: usize,
    signs: Vec<f64>,
}

impl SignPattern {
    pub fn from_order(order: &OrthantOrder, convention: SignConvention) -> Self {
        let d = order.dim();
        let flip = match convention {
            SignConvention::Kamke => 1.0,
            SignConvention::ReversedCone => -1.0,
        };
        let signs = (0..d * d)
            .map(|k| flip * order.sign(k / d) * order.sign(k % d))
            .collect();
        Self { dim: d, signs }
    }

    pub fn required(&self, i: usize, j: usize) -> f64 {
        self.signs[i * self.dim + j]
    }
}

/// Row-major square matrix valued field over states.
pub trait JacobianField: Sync {
    fn dim(&self) -> usize;
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;
    /// Whether every entry is affine in the state, which makes vertex
    /// evaluation an exact certificate.
    fn is_affine(&self) -> bool {
        false
    }
}

/// Wraps a closure as a (non-affine) Jacobian field.
pub struct FnJacobian<F> {
    dim: usize,
    f: F,
    affine: bool,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> FnJacobian<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            affine: false,
        }
    }

    pub fn affine(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            affine: true,
        }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> JacobianField for FnJacobian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn is_affine(&self) -> bool {
        self.affine
    }
}

/// The enzyme Jacobian `DV`; every entry is affine in the state.
pub struct EnzymeJacobian<'a>(pub &'a EnzymeParams);

impl JacobianField for EnzymeJacobian<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        self.0
            .jacobian(&State4::new(x[0], x[1], x[2], x[3]))
            .into_iter()
            .flatten()
            .collect()
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// `coeffs · x ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct LinearCap {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

/// An axis-aligned box intersected with linear caps.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub caps: Vec<LinearCap>,
}

const FEASIBILITY_SLACK: f64 = 1.0e-12;

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, caps: Vec<LinearCap>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] <= upper[k])) {
            return Err(Error::param(
                "box",
                format!(
                    "lower[{k}] = {} exceeds upper[{k}] = {}",
                    lower[k], upper[k]
                ),
            ));
        }
        if let Some(c) = caps.iter().find(|c| c.coeffs.len() != lower.len()) {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: c.coeffs.len(),
            });
        }
        Ok(Self { lower, upper, caps })
    }

    /// `[0, s_max] × [0, i_max] × [0, cap·T]²` with `c_ES + c_EI ≤ cap·T`.
    pub fn stoichiometric(params: &EnzymeParams, s_max: f64, i_max: f64, cap: f64) -> Self {
        let t = params.total_enzyme * cap;
        Self {
            lower: vec![0.0; 4],
            upper: vec![s_max, i_max, t, t],
            caps: vec![LinearCap {
                coeffs: vec![0.0, 0.0, 1.0, 1.0],
                bound: t,
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= lo - FEASIBILITY_SLACK && *v <= hi + FEASIBILITY_SLACK)
            && self.satisfies_caps(x)
    }

    fn satisfies_caps(&self, x: &[f64]) -> bool {
        self.caps.iter().all(|c| {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            lhs <= c.bound + FEASIBILITY_SLACK * (1.0 + c.bound.abs())
        })
    }

    /// Vertices of the feasible polytope: feasible box corners plus the
    /// points where each cap hyperplane cuts a box edge. Exact when there is
    /// at most one cap.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let corner = |mask: usize| -> Vec<f64> {
            (0..d)
                .map(|k| {
                    if mask >> k & 1 == 1 {
                        self.upper[k]
                    } else {
                        self.lower[k]
                    }
                })
                .collect()
        };
        let mut out: Vec<Vec<f64>> = (0..1usize << d)
            .map(corner)
            .filter(|x| self.satisfies_caps(x))
            .collect();
        for cap in &self.caps {
            for mask in 0..1usize << d {
                for k in 0..d {
                    if mask >> k & 1 == 1 || cap.coeffs[k] == 0.0 {
                        continue;
                    }
                    let mut x = corner(mask);
                    let rest: f64 = (0..d)
                        .filter(|&j| j != k)
                        .map(|j| cap.coeffs[j] * x[j])
                        .sum();
                    let v = (cap.bound - rest) / cap.coeffs[k];
                    if v > self.lower[k] && v < self.upper[k] {
                        x[k] = v;
                        if self.satisfies_caps(&x) {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        out.dedup();
        out
    }

    /// Feasible Halton points; errors if none is found.
    pub fn halton_points(&self, count: usize) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let mut pts = Vec::with_capacity(count);
        let budget = count.saturating_mul(100).max(1000);
        let mut index = 1u64;
        while pts.len() < count && index as usize <= budget {
            let x: Vec<f64> = (0..d)
                .map(|k| {
                    let u = radical_inverse(index, PRIMES[k % PRIMES.len()]);
                    self.lower[k] + u * (self.upper[k] - self.lower[k])
                })
                .collect();
            if self.satisfies_caps(&x) {
                pts.push(x);
            }
            index += 1;
        }
        if pts.is_empty() && self.vertices().is_empty() {
            return Err(Error::EmptyBox { tried: budget });
        }
        Ok(pts)
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while n > 0 {
        out += (n % base) as f64 * scale;
        n /= base;
        scale *= inv;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub state: Vec<f64>,
    pub entry: (usize, usize),
    /// The raw Jacobian entry (its signed margin is negative).
    pub value: f64,
    pub signed_margin: f64,
}

/// Exact per-entry minimum of the signed entry over the polytope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryBound {
    pub entry: (usize, usize),
    pub min_signed: f64,
    pub argmin: Vec<f64>,
    /// The entry vanishes at every vertex, hence everywhere.
    pub identically_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub convention: SignConvention,
    pub includes_diagonal: bool,
    pub is_monotone: bool,
    pub is_intraspecific: bool,
    /// Witnesses for the check that was requested (at most [`MAX_WITNESSES`]).
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub samples_checked: usize,
    pub min_margin: f64,
    pub min_margin_entry: Option<(usize, usize)>,
    pub min_margin_state: Vec<f64>,
    /// Present when the field is affine: exact entry minima from vertices.
    pub vertex_bounds: Option<Vec<EntryBound>>,
}

/// Checks the sign pattern on off-diagonal entries.
pub fn check_monotone(
    jac: &dyn JacobianField,
    region: &StateBox,
    order: &OrthantOrder,
    convention: SignConvention,
    sample_count: usize,
) -> Result<MonotonicityReport> {
    certify(jac, region, order, convention, sample_count, false)
}

/// Checks the sign pattern on every entry, diagonal included.
pub fn check_intraspecific(
    jac: &dyn JacobianField,
    region: &StateBox,
    order: &OrthantOrder,
    convention: SignConvention,
    sample_count: usize,
) -> Result<MonotonicityReport> {
    certify(jac, region, order, convention, sample_count, true)
}

struct PointScan {
    off_min: (f64, usize),
    diag_min: (f64, usize),
    jac: Vec<f64>,
}

fn certify(
    jac: &dyn JacobianField,
    region: &StateBox,
    order: &OrthantOrder,
    convention: SignConvention,
    sample_count: usize,
    include_diagonal: bool,
) -> Result<MonotonicityReport> {
    if sample_count == 0 {
        return Err(Error::param("sample_count", "must be at least 1"));
    }
    let d = jac.dim();
    order.check_dim(d)?;
    if region.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: region.dim(),
        });
    }
    let pattern = SignPattern::from_order(order, convention);
    let vertices = region.vertices();
    let mut points = region.halton_points(sample_count)?;
    points.extend(vertices.iter().cloned());

    let scans: Vec<PointScan> = points
        .par_iter()
        .map(|x| {
            let j = jac.jacobian(x);
            let mut off_min = (f64::INFINITY, usize::MAX);
            let mut diag_min = (f64::INFINITY, usize::MAX);
            for k in 0..d * d {
                let m = pattern.required(k / d, k % d) * j[k];
                let slot = if k / d == k % d {
                    &mut diag_min
                } else {
                    &mut off_min
                };
                if m < slot.0 {
                    *slot = (m, k);
                }
            }
            PointScan {
                off_min,
                diag_min,
                jac: j,
            }
        })
        .collect();

    let checked = |k: usize| include_diagonal || k / d != k % d;

    // structural zeros: entries vanishing at every scanned point
    let zero_entry: Vec<bool> = (0..d * d)
        .map(|k| scans.iter().all(|s| s.jac[k] == 0.0))
        .collect();

    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut sampled_off_ok = true;
    let mut sampled_diag_ok = true;
    let mut min_margin = f64::INFINITY;
    let mut min_entry = None;
    let mut min_state = Vec::new();
    for (x, scan) in points.iter().zip(&scans) {
        sampled_off_ok &= scan.off_min.0 >= 0.0;
        sampled_diag_ok &= scan.diag_min.0 >= 0.0;
        for k in (0..d * d).filter(|&k| checked(k)) {
            let m = pattern.required(k / d, k % d) * scan.jac[k];
            let better = m < min_margin
                || (m == min_margin
                    && min_entry.is_some_and(|(i, j): (usize, usize)| zero_entry[i * d + j])
                    && !zero_entry[k]);
            if better {
                min_margin = m;
                min_entry = Some((k / d, k % d));
                min_state = x.clone();
            }
            if m < 0.0 {
                violation_count += 1;
                if violations.len() < MAX_WITNESSES {
                    violations.push(Violation {
                        state: x.clone(),
                        entry: (k / d, k % d),
                        value: scan.jac[k],
                        signed_margin: m,
                    });
                }
            }
        }
    }

    let vertex_bounds = jac.is_affine().then(|| {
        (0..d * d)
            .filter(|&k| checked(k))
            .map(|k| {
                let (mut best, mut arg) = (f64::INFINITY, Vec::new());
                let mut all_zero = true;
                for v in &vertices {
                    let val = jac.jacobian(v)[k];
                    all_zero &= val == 0.0;
                    let m = pattern.required(k / d, k % d) * val;
                    if m < best {
                        best = m;
                        arg = v.clone();
                    }
                }
                EntryBound {
                    entry: (k / d, k % d),
                    min_signed: best,
                    argmin: arg,
                    identically_zero: all_zero,
                }
            })
            .collect::<Vec<_>>()
    });

    // For affine fields the vertex minima decide; sampling only finds witnesses.
    let (off_ok, diag_ok) = if jac.is_affine() {
        let exact = |diag: bool| {
            (0..d * d).filter(|&k| (k / d == k % d) == diag).all(|k| {
                vertices
                    .iter()
                    .all(|v| pattern.required(k / d, k % d) * jac.jacobian(v)[k] >= 0.0)
            })
        };
        (exact(false), exact(true))
    } else {
        (sampled_off_ok, sampled_diag_ok)
    };

    Ok(MonotonicityReport {
        convention,
        includes_diagonal: include_diagonal,
        is_monotone: off_ok,
        is_intraspecific: off_ok && diag_ok,
        violations,
        violation_count,
        samples_checked: points.len(),
        min_margin,
        min_margin_entry: min_entry,
        min_margin_state: min_state,
        vertex_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_examples() {
        let o = OrthantOrder::enzyme();
        let r = o
            .compare(&[1.0, 1.0, 0.0, 0.0], &[0.5, 0.5, 0.1, 0.1])
            .unwrap();
        assert_eq!(r, OrderRelation::StrictAll);
        let u = [0.3, 0.2, 0.1, 0.0];
        assert_eq!(o.compare(&u, &u).unwrap(), OrderRelation::Leq);
        let p = OrthantOrder::new(vec![1, 1]).unwrap();
        assert_eq!(
            p.compare(&[0.0, 1.0], &[1.0, 0.0]).unwrap(),
            OrderRelation::Incomparable
        );
        assert_eq!(
            p.compare(&[0.0, 1.0], &[1.0, 1.0]).unwrap(),
            OrderRelation::StrictSome
        );
        assert!(matches!(
            p.compare(&[0.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn order_rejects_bad_signs() {
        assert!(OrthantOrder::new(vec![]).is_err());
        assert!(OrthantOrder::new(vec![1, 0]).is_err());
    }

    #[test]
    fn defect_and_margin() {
        let o = OrthantOrder::enzyme();
        let lo = [2.0, 2.0, 0.1, 0.1];
        let hi = [1.0, 1.5, 0.3, 0.2];
        assert_eq!(o.defect(&lo, &hi), 0.0);
        assert!((o.margin(&lo, &hi) - 0.1).abs() < 1e-15);
        assert!((o.defect(&hi, &lo) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vertices_of_capped_square() {
        let b = StateBox::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![LinearCap {
                coeffs: vec![1.0, 1.0],
                bound: 1.0,
            }],
        )
        .unwrap();
        let v = b.vertices();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn zero_field_is_monotone_with_zero_margin() {
        let b = StateBox::new(vec![0.0; 3], vec![1.0; 3], vec![]).unwrap();
        let zero = FnJacobian::new(3, |_x: &[f64]| vec![0.0; 9]);
        let o = OrthantOrder::new(vec![1, -1, 1]).unwrap();
        for conv in [SignConvention::Kamke, SignConvention::ReversedCone] {
            let r = check_monotone(&zero, &b, &o, conv, 100).unwrap();
            assert!(r.is_monotone && r.is_intraspecific);
            assert_eq!(r.min_margin, 0.0);
            assert!(r.violations.is_empty());
        }
    }

    #[test]
    fn positive_diagonal_separates_the_two_notions() {
        let b = StateBox::new(vec![-1.0], vec![1.0], vec![]).unwrap();
        let f = FnJacobian::new(1, |_x: &[f64]| vec![1.0]);
        let o = OrthantOrder::new(vec![-1]).unwrap();
        let r = check_intraspecific(&f, &b, &o, SignConvention::ReversedCone, 10).unwrap();
        assert!(r.is_monotone);
        assert!(!r.is_intraspecific);
        assert!(!r.violations.is_empty());
        let m = check_monotone(&f, &b, &o, SignConvention::ReversedCone, 10).unwrap();
        assert!(m.is_monotone && m.violations.is_empty());
    }

    #[test]
    fn empty_box_is_an_error() {
        let b = StateBox::new(
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![LinearCap {
                coeffs: vec![1.0, 1.0],
                bound: 0.5,
            }],
        )
        .unwrap();
        let f = FnJacobian::new(2, |_x: &[f64]| vec![0.0; 4]);
        let o = OrthantOrder::new(vec![1, 1]).unwrap();
        let err = check_monotone(&f, &b, &o, SignConvention::Kamke, 10).unwrap_err();
        assert!(matches!(err, Error::EmptyBox { .. }));
        assert!(check_monotone(&f, &b, &o, SignConvention::Kamke, 0).is_err());
    }

    #[test]
    fn enzyme_is_intraspecific_on_stoichiometric_box() {
        let p = EnzymeParams::benchmark();
        let b = StateBox::stoichiometric(&p, 3.0, 3.0, 1.0);
        let r = check_intraspecific(
            &EnzymeJacobian(&p),
            &b,
            &OrthantOrder::enzyme(),
            SignConvention::ReversedCone,
            2000,
        )
        .unwrap();
        assert!(
            r.is_monotone && r.is_intraspecific,
            "{:?}",
            r.violations.first()
        );
        assert_eq!(r.min_margin, 0.0);
        let bounds = r.vertex_bounds.unwrap();
        for entry in [(2, 0), (3, 1)] {
            let b = bounds.iter().find(|b| b.entry == entry).unwrap();
            assert_eq!(b.min_signed, 0.0);
            assert!((b.argmin[2] + b.argmin[3] - p.total_enzyme).abs() < 1e-12);
        }
    }

    #[test]
    fn enzyme_fails_beyond_enzyme_total() {
        let p = EnzymeParams::benchmark();
        let b = StateBox::stoichiometric(&p, 3.0, 3.0, 2.0);
        let r = check_intraspecific(
            &EnzymeJacobian(&p),
            &b,
            &OrthantOrder::enzyme(),
            SignConvention::ReversedCone,
            2000,
        )
        .unwrap();
        assert!(!r.is_monotone && !r.is_intraspecific);
        let w = &r.violations[0];
        assert!(w.state[2] + w.state[3] > p.total_enzyme);
        assert!(r
            .violations
            .iter()
            .any(|v| v.entry == (2, 0) || v.entry == (3, 1)));
    }

    #[test]
    fn enzyme_is_not_kamke_monotone_for_this_order() {
        // S and ES reinforce each other while ES and EI compete and S feeds
        // EI: no orthant makes all three couplings consistent.
        let p = EnzymeParams::benchmark();
        let b = StateBox::stoichiometric(&p, 3.0, 3.0, 1.0);
        let r = check_monotone(
            &EnzymeJacobian(&p),
            &b,
            &OrthantOrder::enzyme(),
            SignConvention::Kamke,
            500,
        )
        .unwrap();
        assert!(!r.is_monotone);
    }
}
