//! Time integration of the reduced system, the shifted linear almost-periodic
//! solve `ẋ + Lx = g`, and the monotone iteration built from it.

use std::f64::consts::LN_10;

use serde::Serialize;

use crate::apsignal::{ApSignal, SampledSignal, TimeWindow};
use crate::error::{Error, Result};
use crate::model::{EnzymeParams, Lifted, Reduced, ReducedWithProduct, State4, State6};
use crate::monotonicity::{EnzymeJacobian, JacobianField, OrderRelation, OrthantOrder, StateBox};
use crate::ode::{self, StepControl, StepStats};

/// Sampled solution `t ↦ c(t)` with optional product accumulator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State4>,
    pub product: Option<Vec<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<State4>,
        product: Option<Vec<f64>>,
        stats: StepStats,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        if let Some(p) = &product {
            if p.len() != times.len() {
                return Err(Error::DimensionMismatch {
                    expected: times.len(),
                    got: p.len(),
                });
            }
        }
        if times.len() < 2 {
            return Err(Error::TrajectoryTooShort(format!(
                "{} samples",
                times.len()
            )));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::param(
                "times",
                format!("not strictly increasing at index {}", k + 1),
            ));
        }
        Ok(Self {
            times,
            states,
            product,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn final_state(&self) -> State4 {
        self.states[self.states.len() - 1]
    }

    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.to_array()[index]).collect()
    }

    /// Smallest coordinate over all samples.
    pub fn min_component(&self) -> f64 {
        self.states
            .iter()
            .map(State4::min_component)
            .fold(f64::INFINITY, f64::min)
    }

    /// Samples with `t ≥ from`.
    pub fn tail_from(&self, from: f64) -> Result<Self> {
        let k = self.times.partition_point(|&t| t < from);
        Self::new(
            self.times[k..].to_vec(),
            self.states[k..].to_vec(),
            self.product.as_ref().map(|p| p[k..].to_vec()),
            self.stats,
        )
    }

    /// Four-point Lagrange interpolation on the (possibly nonuniform) grid;
    /// clamps outside the sampled range.
    pub fn state_at(&self, t: f64) -> State4 {
        let n = self.times.len();
        let t = t.clamp(self.times[0], self.times[n - 1]);
        let k = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        if n < 4 {
            let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
            let (a, b) = (self.states[k].to_array(), self.states[k + 1].to_array());
            return State4::from_array(std::array::from_fn(|c| a[c] * (1.0 - w) + b[c] * w));
        }
        let i0 = k.saturating_sub(1).min(n - 4);
        let nodes = &self.times[i0..i0 + 4];
        let mut out = [0.0; 4];
        for (j, &tj) in nodes.iter().enumerate() {
            let w: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &tm)| (t - tm) / (tj - tm))
                .product();
            let s = self.states[i0 + j].to_array();
            for c in 0..4 {
                out[c] += w * s[c];
            }
        }
        State4::from_array(out)
    }

    /// Re-samples onto `grid` by [`Trajectory::state_at`].
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        Self::new(
            grid.to_vec(),
            grid.iter().map(|&t| self.state_at(t)).collect(),
            None,
            self.stats,
        )
    }
}

/// Integrates the reduced system from `x0` on `[t0, t1]`.
pub fn simulate(
    params: &EnzymeParams,
    x0: State4,
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<Trajectory> {
    params.validate()?;
    let sol = ode::integrate(&Reduced(params), x0.to_array(), t0, t1, control)?;
    Trajectory::new(
        sol.times,
        sol.states.into_iter().map(State4::from_array).collect(),
        None,
        sol.stats,
    )
}

/// As [`simulate`], integrating `ċ_P = k₃ c_ES` alongside from `c_p0`.
pub fn simulate_with_product(
    params: &EnzymeParams,
    x0: State4,
    c_p0: f64,
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<Trajectory> {
    params.validate()?;
    let a = x0.to_array();
    let sol = ode::integrate(
        &ReducedWithProduct(params),
        [a[0], a[1], a[2], a[3], c_p0],
        t0,
        t1,
        control,
    )?;
    let states = sol
        .states
        .iter()
        .map(|x| State4::new(x[0], x[1], x[2], x[3]))
        .collect();
    let product = sol.states.iter().map(|x| x[4]).collect();
    Trajectory::new(sol.times, states, Some(product), sol.stats)
}

/// Solution of the unreduced six-species system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<State6>,
    pub stats: StepStats,
}

impl LiftedTrajectory {
    /// `max_t |c_E + c_ES + c_EI − T|`.
    pub fn max_conservation_defect(&self, total_enzyme: f64) -> f64 {
        self.states
            .iter()
            .map(|s| s.conservation_defect(total_enzyme))
            .fold(0.0, f64::max)
    }
}

/// Integrates the six-species system, free enzyme included, without using
/// the conservation law.
pub fn simulate_lifted(
    params: &EnzymeParams,
    x0: State6,
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<LiftedTrajectory> {
    params.validate()?;
    let sol = ode::integrate(&Lifted(params), x0.to_array(), t0, t1, control)?;
    Ok(LiftedTrajectory {
        times: sol.times,
        states: sol.states.into_iter().map(State6::from_array).collect(),
        stats: sol.stats,
    })
}

/// Decades of decay demanded of the warm-up: `e^{−L·T_warm} ≤ 10⁻¹²`.
pub const WARMUP_DECADES: f64 = 12.0;

/// `T_warm = ⌈12·ln 10 / L⌉`.
pub fn warmup_length(shift: f64) -> f64 {
    (WARMUP_DECADES * LN_10 / shift).ceil()
}

/// `∫₀¹ e^{−a(1−θ)} θ^k dθ` for `k = 0..3`.
fn exp_moments(a: f64) -> [f64; 4] {
    if a < 1.0 {
        std::array::from_fn(|k| {
            let mut term = 1.0 / (k as f64 + 1.0);
            let mut sum = term;
            for m in 0..40 {
                term *= -a / (k + m + 2) as f64;
                sum += term;
                if term.abs() < 1.0e-18 * sum.abs() {
                    break;
                }
            }
            sum
        })
    } else {
        let mut out = [0.0; 4];
        out[0] = -(-a).exp_m1() / a;
        for k in 1..4 {
            out[k] = (1.0 - k as f64 * out[k - 1]) / a;
        }
        out
    }
}

/// Exact one-step propagator of `ẋ + Lx = g` for `g` cubic Hermite on the
/// step: `x₁ = decay·x₀ + h·(w₀g₀ + w₁hġ₀ + w₂g₁ + w₃hġ₁)`.
#[derive(Debug, Clone, Copy)]
struct ExpKernel {
    step: f64,
    decay: f64,
    weights: [f64; 4],
}

impl ExpKernel {
    fn new(shift: f64, step: f64) -> Self {
        let a = shift * step;
        let m = exp_moments(a);
        Self {
            step,
            decay: (-a).exp(),
            weights: [
                m[0] - 3.0 * m[2] + 2.0 * m[3],
                m[1] - 2.0 * m[2] + m[3],
                3.0 * m[2] - 2.0 * m[3],
                m[3] - m[2],
            ],
        }
    }

    fn advance(&self, x0: f64, g0: f64, dg0: f64, g1: f64, dg1: f64) -> f64 {
        let h = self.step;
        let w = &self.weights;
        self.decay * x0 + h * (w[0] * g0 + w[1] * h * dg0 + w[2] * g1 + w[3] * h * dg1)
    }
}

/// Right-hand side of `ẋ + Lx = g`.
#[derive(Debug, Clone, Copy)]
pub enum LinearForcing<'a> {
    Signal(&'a ApSignal),
    /// Must cover `[window.start − T_warm, window.end]`.
    Sampled(&'a SampledSignal),
}

/// Closed-form response of `ẋ + Lx = cos λt` (or `sin λt`): amplitude scaled
/// by `gain`, delayed by `phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicResponse {
    pub frequency: f64,
    pub gain: f64,
    pub phase: f64,
}

impl HarmonicResponse {
    pub fn new(shift: f64, frequency: f64) -> Self {
        Self {
            frequency,
            gain: 1.0 / shift.hypot(frequency),
            phase: (frequency / shift).atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub shift: f64,
    pub warmup: f64,
    /// `x` on the window grid.
    pub solution: SampledSignal,
    /// `ẋ = g − Lx` on the same grid.
    pub derivative: Vec<f64>,
    /// The exact bounded solution, for almost-periodic input.
    pub closed_form: Option<ApSignal>,
    pub responses: Vec<HarmonicResponse>,
}

/// The bounded solution `x(t) = ∫_{−∞}^t e^{−L(t−s)} g(s) ds` on `window`
/// with the default warm-up [`warmup_length`].
pub fn ap_linear_solve(
    shift: f64,
    forcing: LinearForcing<'_>,
    window: TimeWindow,
    step: f64,
) -> Result<LinearSolution> {
    ap_linear_solve_with_warmup(shift, forcing, window, step, warmup_length(shift.max(0.0)))
}

/// As [`ap_linear_solve`] with an explicit warm-up length. Integration starts
/// from zero at `window.start − warmup`; sampled forcing uses its own grid
/// (`step` is ignored) with derivatives from fourth-order differences.
pub fn ap_linear_solve_with_warmup(
    shift: f64,
    forcing: LinearForcing<'_>,
    window: TimeWindow,
    step: f64,
    warmup: f64,
) -> Result<LinearSolution> {
    if !(shift.is_finite() && shift > 0.0) {
        return Err(Error::NonPositiveShift(shift));
    }
    if !(warmup.is_finite() && warmup >= 0.0) {
        return Err(Error::param(
            "warmup",
            format!("{warmup} must be nonnegative"),
        ));
    }
    let (g, dg, h, t_first, n_warm, closed_form) = match forcing {
        LinearForcing::Signal(sig) => {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::param("step", format!("{step} must be positive")));
            }
            let n_warm = (warmup / step).ceil() as usize;
            let n_win = (window.length() / step).round().max(1.0) as usize;
            let h = window.length() / n_win as f64;
            let t_first = window.start - n_warm as f64 * h;
            let ts: Vec<f64> = (0..=n_warm + n_win)
                .map(|k| t_first + k as f64 * h)
                .collect();
            let g = ts.iter().map(|&t| sig.evaluate(t)).collect();
            let dg = ts.iter().map(|&t| sig.derivative(t)).collect();
            (
                g,
                dg,
                h,
                t_first,
                n_warm,
                Some(harmonic_response(shift, sig)),
            )
        }
        LinearForcing::Sampled(s) => {
            let (i_win, i_end) = s.index_range(window)?;
            let n_warm = (warmup / s.step).ceil() as usize;
            if n_warm > i_win {
                return Err(Error::WindowNotCovered {
                    start: window.start - warmup,
                    end: window.end,
                    first: s.start,
                    last: s.end(),
                });
            }
            let lo = i_win - n_warm;
            let g: Vec<f64> = s.values[lo..=i_end].to_vec();
            let dg = finite_derivative(&s.values, s.step)[lo..=i_end].to_vec();
            (g, dg, s.step, s.time(lo), n_warm, None)
        }
    };
    let kernel = ExpKernel::new(shift, h);
    let mut x = vec![0.0; g.len()];
    for k in 1..g.len() {
        x[k] = kernel.advance(x[k - 1], g[k - 1], dg[k - 1], g[k], dg[k]);
    }
    let derivative = (n_warm..g.len()).map(|k| g[k] - shift * x[k]).collect();
    let mut solution = SampledSignal::new(t_first + n_warm as f64 * h, h, x[n_warm..].to_vec())?;
    solution.slowest_frequency = match forcing {
        LinearForcing::Signal(sig) => sig.min_frequency(),
        LinearForcing::Sampled(s) => s.slowest_frequency,
    };
    let responses = match forcing {
        LinearForcing::Signal(sig) => sig
            .frequencies()
            .map(|f| HarmonicResponse::new(shift, f))
            .collect(),
        LinearForcing::Sampled(_) => Vec::new(),
    };
    Ok(LinearSolution {
        shift,
        warmup: n_warm as f64 * h,
        solution,
        derivative,
        closed_form,
        responses,
    })
}

/// Exact bounded response of `ẋ + Lx = g` to almost-periodic `g`.
pub fn harmonic_response(shift: f64, g: &ApSignal) -> ApSignal {
    let terms = g
        .terms()
        .iter()
        .map(|h| {
            let r = HarmonicResponse::new(shift, h.frequency);
            let (s, c) = r.phase.sin_cos();
            crate::apsignal::Harmonic::new(
                h.frequency,
                r.gain * (h.cos_coeff * c - h.sin_coeff * s),
                r.gain * (h.cos_coeff * s + h.sin_coeff * c),
            )
        })
        .collect();
    ApSignal::new(g.offset() / shift, terms).expect("frequencies inherited from a valid signal")
}

/// Fourth-order central differences, one-sided at the ends.
fn finite_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if n < 5 {
                let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
                (v[b] - v[a]) / h
            } else if i >= 2 && i + 2 < n {
                (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
            } else if i < 2 {
                (-25.0 * v[i] + 48.0 * v[i + 1] - 36.0 * v[i + 2] + 16.0 * v[i + 3]
                    - 3.0 * v[i + 4])
                    / (12.0 * h)
            } else {
                (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3] + 3.0 * v[i - 4])
                    / (12.0 * h)
            }
        })
        .collect()
}

/// `L = 1 + max(0, −m)` with `m` the infimum of the diagonal Jacobian
/// entries over `region`: exact from the vertices for affine fields, vertices
/// plus Halton samples otherwise.
pub fn choose_shift_for(jac: &dyn JacobianField, region: &StateBox) -> Result<f64> {
    let n = jac.dim();
    if region.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: region.dim(),
        });
    }
    let mut points = region.vertices();
    if !jac.is_affine() {
        points.extend(region.halton_points(crate::monotonicity::DEFAULT_SAMPLE_COUNT)?);
    }
    if points.is_empty() {
        return Err(Error::EmptyBox { tried: 0 });
    }
    let m = points
        .iter()
        .map(|x| {
            let j = jac.jacobian(x);
            (0..n).map(|i| j[i * n + i]).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(1.0 + (-m).max(0.0))
}

pub fn choose_shift(params: &EnzymeParams, region: &StateBox) -> Result<f64> {
    choose_shift_for(&EnzymeJacobian(params), region)
}

/// Settings of [`monotone_iterate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationConfig {
    pub window: TimeWindow,
    pub step: f64,
    pub n_max: usize,
    pub stop_tol: f64,
    /// Abort when a monotonicity defect exceeds `100·stop_tol`.
    pub strict_order: bool,
    /// Keep every `snapshot_stride`-th window sample of each iterate
    /// (0 keeps none).
    pub snapshot_stride: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            window: TimeWindow {
                start: 0.0,
                end: 2000.0,
            },
            step: 0.01,
            n_max: 200,
            stop_tol: 1.0e-6,
            strict_order: true,
            snapshot_stride: 0,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        TimeWindow::new(self.window.start, self.window.end)?;
        for (name, v) in [("step", self.step), ("stop_tol", self.stop_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if self.n_max == 0 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        Ok(())
    }
}

/// Measurements taken after producing iterate `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationState {
    pub n: usize,
    /// `max(0, −ε·(x_n − x_{n−1}))`: failure of the lower sequence to rise.
    pub lower_defect: f64,
    /// `max(0, −ε·(X_{n−1} − X_n))`: failure of the upper sequence to fall.
    pub upper_defect: f64,
    /// `max(0, −ε·(X_n − x_n))`: crossing of the two sequences.
    pub crossing_defect: f64,
    /// `sup |X_n − x_n|` over the window.
    pub gap: f64,
    pub lower_change: f64,
    pub upper_change: f64,
    pub snapshot: Option<IterateSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateSnapshot {
    pub times: Vec<f64>,
    pub lower: Vec<State4>,
    pub upper: Vec<State4>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRun {
    pub shift: f64,
    pub warmup: f64,
    pub config: IterationConfig,
    pub steps: Vec<IterationState>,
    pub converged: bool,
    /// Last lower/upper iterates on the window grid.
    pub lower: Trajectory,
    pub upper: Trajectory,
    /// `sup |u̇ − V(t, u)|` of the last iterates, at grid points and
    /// midpoints via Hermite dense output.
    pub lower_residual: f64,
    pub upper_residual: f64,
    pub order_tolerance: f64,
}

impl IterationRun {
    pub fn max_monotonicity_defect(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.lower_defect.max(s.upper_defect))
            .fold(0.0, f64::max)
    }

    pub fn gap_nonincreasing(&self, tolerance: f64) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[1].gap <= w[0].gap + tolerance)
    }

    pub fn residual(&self) -> f64 {
        self.lower_residual.max(self.upper_residual)
    }
}

/// Iterate in Hermite form on the extended grid.
#[derive(Clone)]
struct Iterate {
    values: Vec<[f64; 4]>,
    derivs: Vec<[f64; 4]>,
}

struct IterationGrid<'a> {
    params: &'a EnzymeParams,
    shift: f64,
    t_first: f64,
    step: f64,
    len: usize,
    window_first: usize,
    kernel: ExpKernel,
}

impl IterationGrid<'_> {
    fn time(&self, k: usize) -> f64 {
        self.t_first + k as f64 * self.step
    }

    fn constant(&self, c: State4) -> Iterate {
        Iterate {
            values: vec![c.to_array(); self.len],
            derivs: vec![[0.0; 4]; self.len],
        }
    }

    /// Solves `u̇ + Lu = Lu_n + V(t, u_n)` componentwise.
    fn advance(&self, u: &Iterate) -> Iterate {
        let p = self.params;
        let l = self.shift;
        let (g, dg): (Vec<[f64; 4]>, Vec<[f64; 4]>) = (0..self.len)
            .map(|k| {
                let t = self.time(k);
                let x = State4::from_array(u.values[k]);
                let v = p.vector_field(t, &x).to_array();
                let jac = p.jacobian(&x);
                let dt = p.time_derivative(t).to_array();
                let du = u.derivs[k];
                let g: [f64; 4] = std::array::from_fn(|i| l * u.values[k][i] + v[i]);
                let dg: [f64; 4] = std::array::from_fn(|i| {
                    l * du[i] + (0..4).map(|j| jac[i][j] * du[j]).sum::<f64>() + dt[i]
                });
                (g, dg)
            })
            .unzip();
        let mut values = vec![[0.0; 4]; self.len];
        for k in 1..self.len {
            values[k] = std::array::from_fn(|i| {
                self.kernel.advance(
                    values[k - 1][i],
                    g[k - 1][i],
                    dg[k - 1][i],
                    g[k][i],
                    dg[k][i],
                )
            });
        }
        let derivs = (0..self.len)
            .map(|k| std::array::from_fn(|i| g[k][i] - l * values[k][i]))
            .collect();
        Iterate { values, derivs }
    }

    /// `sup |u̇ − V(t, u)|` over window nodes and midpoints.
    fn residual(&self, u: &Iterate) -> f64 {
        let p = self.params;
        let h = self.step;
        let mut worst: f64 = 0.0;
        for k in self.window_first..self.len {
            let t = self.time(k);
            let v = p
                .vector_field(t, &State4::from_array(u.values[k]))
                .to_array();
            for i in 0..4 {
                worst = worst.max((u.derivs[k][i] - v[i]).abs());
            }
            if k + 1 < self.len {
                let (x0, x1, f0, f1) = (u.values[k], u.values[k + 1], u.derivs[k], u.derivs[k + 1]);
                let xm: [f64; 4] =
                    std::array::from_fn(|i| 0.5 * (x0[i] + x1[i]) + 0.125 * h * (f0[i] - f1[i]));
                let dm: [f64; 4] =
                    std::array::from_fn(|i| 1.5 * (x1[i] - x0[i]) / h - 0.25 * (f0[i] + f1[i]));
                let v = p
                    .vector_field(t + 0.5 * h, &State4::from_array(xm))
                    .to_array();
                for i in 0..4 {
                    worst = worst.max((dm[i] - v[i]).abs());
                }
            }
        }
        worst
    }

    fn window_trajectory(&self, u: &Iterate) -> Trajectory {
        let times = (self.window_first..self.len)
            .map(|k| self.time(k))
            .collect();
        let states = u.values[self.window_first..]
            .iter()
            .map(|x| State4::from_array(*x))
            .collect();
        Trajectory::new(times, states, None, StepStats::default()).expect("window has samples")
    }
}

/// Largest `max(0, −ε·(b − a))` over the window, ignoring defects below
/// `tolerance`; and the sup-norm distance.
fn order_stats(order: &OrthantOrder, a: &[[f64; 4]], b: &[[f64; 4]], tolerance: f64) -> (f64, f64) {
    let mut defect: f64 = 0.0;
    let mut dist: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = order.defect(x, y);
        if d > tolerance {
            defect = defect.max(d);
        }
        for i in 0..4 {
            dist = dist.max((y[i] - x[i]).abs());
        }
    }
    (defect, dist)
}

/// Runs the shifted-linear iteration from the constant pair `(sub, sup)`.
///
/// Both sequences use the same map `u_{n+1} = (d/dt + L)⁻¹(Lu_n + V(t, u_n))`,
/// solved exactly for Hermite-interpolated right-hand sides on the grid
/// `[window.start − T_warm, window.end]`. Iteration stops once both
/// sequences move less than `stop_tol` in sup norm over the window.
///
/// Every solve starts from zero at the beginning of the warm-up, so the
/// fixed point on the grid is the trajectory released from the origin there;
/// it meets the almost-periodic orbit once that transient has decayed.
pub fn monotone_iterate(
    params: &EnzymeParams,
    sub: State4,
    sup: State4,
    shift: f64,
    config: &IterationConfig,
) -> Result<IterationRun> {
    params.validate()?;
    config.validate()?;
    if !(shift.is_finite() && shift > 0.0) {
        return Err(Error::NonPositiveShift(shift));
    }
    let window = config.window;
    let n_win = (window.length() / config.step).round().max(1.0) as usize;
    let h = window.length() / n_win as f64;
    let n_warm = (warmup_length(shift) / h).ceil() as usize;
    let grid = IterationGrid {
        params,
        shift,
        t_first: window.start - n_warm as f64 * h,
        step: h,
        len: n_warm + n_win + 1,
        window_first: n_warm,
        kernel: ExpKernel::new(shift, h),
    };
    let order = OrthantOrder::enzyme();
    let scale = sub
        .to_array()
        .iter()
        .chain(sup.to_array().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let order_tolerance = 1.0e-9 * (1.0 + scale);
    let limit = 100.0 * config.stop_tol;
    let w0 = grid.window_first;

    let snapshot = |lo: &Iterate, up: &Iterate| -> Option<IterateSnapshot> {
        (config.snapshot_stride > 0).then(|| {
            let ks: Vec<usize> = (w0..grid.len).step_by(config.snapshot_stride).collect();
            IterateSnapshot {
                times: ks.iter().map(|&k| grid.time(k)).collect(),
                lower: ks
                    .iter()
                    .map(|&k| State4::from_array(lo.values[k]))
                    .collect(),
                upper: ks
                    .iter()
                    .map(|&k| State4::from_array(up.values[k]))
                    .collect(),
            }
        })
    };

    let mut lower = grid.constant(sub);
    let mut upper = grid.constant(sup);
    let (crossing, gap) = order_stats(
        &order,
        &lower.values[w0..],
        &upper.values[w0..],
        order_tolerance,
    );
    let mut steps = vec![IterationState {
        n: 0,
        lower_defect: 0.0,
        upper_defect: 0.0,
        crossing_defect: crossing,
        gap,
        lower_change: f64::NAN,
        upper_change: f64::NAN,
        snapshot: snapshot(&lower, &upper),
    }];
    let mut converged = false;
    for n in 1..=config.n_max {
        let (next_lower, next_upper) =
            rayon::join(|| grid.advance(&lower), || grid.advance(&upper));
        let (lower_defect, lower_change) = order_stats(
            &order,
            &lower.values[w0..],
            &next_lower.values[w0..],
            order_tolerance,
        );
        let (upper_defect, upper_change) = order_stats(
            &order,
            &next_upper.values[w0..],
            &upper.values[w0..],
            order_tolerance,
        );
        let (crossing_defect, gap) = order_stats(
            &order,
            &next_lower.values[w0..],
            &next_upper.values[w0..],
            order_tolerance,
        );
        lower = next_lower;
        upper = next_upper;
        steps.push(IterationState {
            n,
            lower_defect,
            upper_defect,
            crossing_defect,
            gap,
            lower_change,
            upper_change,
            snapshot: snapshot(&lower, &upper),
        });
        let defect = lower_defect.max(upper_defect);
        if config.strict_order && defect > limit {
            return Err(Error::OrderDefect {
                step: n,
                defect,
                limit,
            });
        }
        if lower_change < config.stop_tol && upper_change < config.stop_tol {
            converged = true;
            break;
        }
    }
    let (lower_residual, upper_residual) =
        rayon::join(|| grid.residual(&lower), || grid.residual(&upper));
    Ok(IterationRun {
        shift,
        warmup: n_warm as f64 * h,
        config: *config,
        steps,
        converged,
        lower: grid.window_trajectory(&lower),
        upper: grid.window_trajectory(&upper),
        lower_residual,
        upper_residual,
        order_tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderPreservationReport {
    /// Why the pair was not simulated, if it was not.
    pub skipped: Option<String>,
    pub relation: OrderRelation,
    /// `max_t max_σ max(0, −ε_σ(upper_σ(t) − lower_σ(t)))`.
    pub max_defect: f64,
    pub time_of_max: f64,
    pub component: Option<usize>,
    pub horizon: f64,
}

/// Simulates an ordered pair of initial states and measures the largest
/// violation of their order. Pairs given in reverse order are swapped;
/// incomparable pairs are skipped.
pub fn order_preservation_test(
    params: &EnzymeParams,
    a: State4,
    b: State4,
    horizon: f64,
    control: &StepControl,
) -> Result<OrderPreservationReport> {
    let order = OrthantOrder::enzyme();
    let (aa, ba) = (a.to_array(), b.to_array());
    let forward = order.compare(&aa, &ba)?;
    let (lower, upper, relation) = if forward != OrderRelation::Incomparable {
        (a, b, forward)
    } else {
        match order.compare(&ba, &aa)? {
            OrderRelation::Incomparable => {
                return Ok(OrderPreservationReport {
                    skipped: Some(format!(
                        "initial states {aa:?} and {ba:?} are not ordered under {:?}",
                        order.signs()
                    )),
                    relation: OrderRelation::Incomparable,
                    max_defect: 0.0,
                    time_of_max: f64::NAN,
                    component: None,
                    horizon,
                });
            }
            r => (b, a, r),
        }
    };
    let (ta, tb) = rayon::join(
        || simulate(params, lower, 0.0, horizon, control),
        || simulate(params, upper, 0.0, horizon, control),
    );
    let (ta, tb) = (ta?, tb?);
    let mut report = OrderPreservationReport {
        skipped: None,
        relation,
        max_defect: 0.0,
        time_of_max: 0.0,
        component: None,
        horizon,
    };
    for ((t, x), y) in ta.times.iter().zip(&ta.states).zip(&tb.states) {
        let (x, y) = (x.to_array(), y.to_array());
        for c in 0..4 {
            let d = -order.sign(c) * (y[c] - x[c]);
            if d > report.max_defect {
                report.max_defect = d;
                report.time_of_max = *t;
                report.component = Some(c);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apsignal::Harmonic;
    use crate::bracketing::{self, InflowSups};
    use crate::model::{EI, ES};

    fn window(a: f64, b: f64) -> TimeWindow {
        TimeWindow::new(a, b).unwrap()
    }

    #[test]
    fn unforced_origin_stays_put() {
        let p = EnzymeParams::benchmark().with_constant_inflows(0.0, 0.0);
        let tr = simulate(&p, State4::default(), 0.0, 50.0, &StepControl::default()).unwrap();
        assert!(tr.states.iter().all(|s| *s == State4::default()));
    }

    #[test]
    fn product_accumulates_k3_ces() {
        let p = EnzymeParams::benchmark();
        let x0 = State4::new(1.0, 0.5, 0.3, 0.1);
        let tr = simulate_with_product(&p, x0, 0.0, 0.0, 20.0, &StepControl::default()).unwrap();
        let ces = tr.component(ES);
        let h = tr.times[1] - tr.times[0];
        // Simpson's rule on the uniform output grid (2000 panels).
        let n = ces.len() - 1;
        assert_eq!(n % 2, 0);
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * ces[i]
            })
            .sum::<f64>()
            * h
            / 3.0;
        let got = *tr.product.as_ref().unwrap().last().unwrap();
        assert!(
            (got - p.k3 * simpson).abs() < 1e-8,
            "{got} vs {}",
            p.k3 * simpson
        );
    }

    #[test]
    fn lifted_system_agrees_with_reduction() {
        let p = EnzymeParams::benchmark();
        let x0 = State4::new(1.0, 0.5, 0.2, 0.1);
        let ctl = StepControl::default();
        let red = simulate(&p, x0, 0.0, 30.0, &ctl).unwrap();
        let lift = simulate_lifted(&p, p.lift(&x0, 0.0), 0.0, 30.0, &ctl).unwrap();
        assert!(lift.max_conservation_defect(p.total_enzyme) < 1e-10);
        let back = p.reduce(lift.states.last().unwrap(), 1e-8).unwrap();
        let diff = back
            .to_array()
            .iter()
            .zip(red.final_state().to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn trajectory_interpolation_is_fourth_order() {
        let err = |h: f64| {
            let ts: Vec<f64> = (0..=(5.0 / h) as usize).map(|k| k as f64 * h).collect();
            let st = ts
                .iter()
                .map(|&t| State4::new(t.sin(), t.cos(), 0.0, 1.0))
                .collect();
            let tr = Trajectory::new(ts, st, None, StepStats::default()).unwrap();
            (0..200)
                .map(|k| 0.3 + k as f64 * 0.0213)
                .map(|t| (tr.state_at(t).c_s - t.sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.05), err(0.025));
        assert!(e1 < 1e-6);
        assert!(e1 / e2 > 12.0, "{e1} / {e2}");
        assert!(Trajectory::new(
            vec![0.0, 0.0],
            vec![State4::default(); 2],
            None,
            StepStats::default()
        )
        .is_err());
    }

    #[test]
    fn moments_series_and_recurrence_agree() {
        for a in [0.999_999, 1.0] {
            let m = exp_moments(a);
            let q: [f64; 4] = std::array::from_fn(|k| {
                // Simpson with many panels.
                let n = 20_000;
                let f = |th: f64| (-a * (1.0 - th)).exp() * th.powi(k as i32);
                let h = 1.0 / n as f64;
                (0..=n)
                    .map(|i| {
                        let w = if i == 0 || i == n {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        w * f(i as f64 * h)
                    })
                    .sum::<f64>()
                    * h
                    / 3.0
            });
            for k in 0..4 {
                assert!((m[k] - q[k]).abs() < 1e-12, "a={a} k={k}");
            }
        }
    }

    #[test]
    fn linear_solve_constant_and_cosine() {
        let c = ApSignal::constant(3.0);
        let s = ap_linear_solve(2.0, LinearForcing::Signal(&c), window(0.0, 10.0), 0.01).unwrap();
        assert!(s.solution.values.iter().all(|x| (x - 1.5).abs() < 1e-11));

        let g = ApSignal::new(0.0, vec![Harmonic::new(1.0, 1.0, 0.0)]).unwrap();
        let s = ap_linear_solve(1.0, LinearForcing::Signal(&g), window(0.0, 50.0), 0.01).unwrap();
        let mut worst: f64 = 0.0;
        for (i, x) in s.solution.values.iter().enumerate() {
            let t = s.solution.time(i);
            worst = worst.max((x - 0.5 * (t.cos() + t.sin())).abs());
            let resid = s.derivative[i] + x - t.cos();
            assert!(resid.abs() < 1e-12);
        }
        assert!(worst < 1e-8, "{worst}");
        let cf = s.closed_form.unwrap();
        assert!((cf.evaluate(0.7) - 0.5 * (0.7f64.cos() + 0.7f64.sin())).abs() < 1e-14);
        let r = s.responses[0];
        assert!((r.gain - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r.phase - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn linear_solve_sampled_input_and_warmup() {
        let g = ApSignal::new(1.0, vec![Harmonic::new(std::f64::consts::PI, 0.0, 1.0)]).unwrap();
        let l = 0.5;
        let sampled = g.sample(window(-80.0, 20.0), 0.01);
        let full =
            ap_linear_solve(l, LinearForcing::Sampled(&sampled), window(0.0, 20.0), 0.01).unwrap();
        let exact = harmonic_response(l, &g);
        for (i, x) in full.solution.values.iter().enumerate() {
            assert!((x - exact.evaluate(full.solution.time(i))).abs() < 1e-8);
        }
        let tw = 20.0;
        let a =
            ap_linear_solve_with_warmup(l, LinearForcing::Signal(&g), window(0.0, 20.0), 0.01, tw)
                .unwrap();
        let b = ap_linear_solve_with_warmup(
            l,
            LinearForcing::Signal(&g),
            window(0.0, 20.0),
            0.01,
            tw / 2.0,
        )
        .unwrap();
        let bound = (-l * tw / 2.0).exp() * g.magnitude_bound() / l;
        let diff = a
            .solution
            .values
            .iter()
            .zip(&b.solution.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= bound, "{diff} > {bound}");
        assert!(ap_linear_solve(
            l,
            LinearForcing::Sampled(&sampled),
            window(-79.0, 20.0),
            0.01
        )
        .is_err());
    }

    #[test]
    fn nonpositive_shift_is_rejected() {
        let c = ApSignal::constant(1.0);
        for l in [0.0, -1.0] {
            assert!(matches!(
                ap_linear_solve(l, LinearForcing::Signal(&c), window(0.0, 1.0), 0.01),
                Err(Error::NonPositiveShift(_))
            ));
        }
    }

    #[test]
    fn shift_from_vertices() {
        let p = EnzymeParams::benchmark();
        let b = StateBox::stoichiometric(&p, 3.0, 3.0, 1.0);
        let l = choose_shift(&p, &b).unwrap();
        // Most negative diagonal entry: −k1·3 − k2 − k3 at c_S = 3.
        assert!((l - (1.0 + 0.95 * 3.0 + 1.2)).abs() < 1e-12);
        let bigger = StateBox::stoichiometric(&p, 4.0, 3.0, 1.0);
        assert!(choose_shift(&p, &bigger).unwrap() >= l);
        let zero = crate::monotonicity::FnJacobian::affine(4, |_: &[f64]| vec![0.0; 16]);
        assert_eq!(choose_shift_for(&zero, &b).unwrap(), 1.0);
    }

    fn short_run(strict: bool) -> Result<IterationRun> {
        let p = EnzymeParams::benchmark();
        let sups = InflowSups::computed(&p).unwrap();
        let pair = bracketing::BracketPair::from_vertices(&p, sups);
        let u = bracketing::attractor_bounds(&p, sups);
        let b = StateBox::stoichiometric(&p, u.omega_star_s, u.omega_star_i, 1.0);
        let l = choose_shift(&p, &b).unwrap();
        let cfg = IterationConfig {
            window: window(0.0, 40.0),
            n_max: 80,
            strict_order: strict,
            ..IterationConfig::default()
        };
        monotone_iterate(&p, pair.sub, pair.sup, l, &cfg)
    }

    #[test]
    fn iteration_converges_to_an_orbit() {
        let run = short_run(false).unwrap();
        assert!(run.converged);
        assert!(run.residual() < 1e-5, "{}", run.residual());
        assert!(run.gap_nonincreasing(1e-12));
        let first = &run.steps[1];
        // The first lower iterate rises above the constant sub-solution.
        assert_eq!(first.lower_defect, 0.0);
        // On the finite grid the fixed point is the solution released from
        // zero at the start of the warm-up; past its transient it follows
        // the attractor.
        let p = EnzymeParams::benchmark();
        let tr = simulate(
            &p,
            State4::new(1.0, 1.0, 0.2, 0.2),
            -200.0,
            40.0,
            &StepControl::default(),
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        for (t, s) in run.lower.times.iter().zip(&run.lower.states).step_by(50) {
            if *t < 25.0 {
                continue;
            }
            let r = tr.state_at(*t);
            for (a, b) in s.to_array().iter().zip(r.to_array()) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn strict_iteration_reports_lost_monotonicity() {
        // The benchmark pair does not generate monotone sequences.
        assert!(matches!(short_run(true), Err(Error::OrderDefect { .. })));
    }

    #[test]
    fn order_preservation_gates_and_counterexample() {
        let p = EnzymeParams::benchmark();
        let ctl = StepControl::default();
        let x = State4::new(1.0, 1.0, 0.2, 0.2);
        let same = order_preservation_test(&p, x, x, 20.0, &ctl).unwrap();
        assert!(same.skipped.is_none());
        assert_eq!(same.max_defect, 0.0);
        let unordered =
            order_preservation_test(&p, x, State4::new(2.0, 0.5, 0.3, 0.3), 20.0, &ctl).unwrap();
        assert!(unordered.skipped.is_some());
        // A strictly ordered pair whose order the flow breaks: the
        // substrate-rich state binds enzyme faster than the other.
        let r = order_preservation_test(
            &p,
            State4::new(2.0, 2.0, 0.05, 0.05),
            State4::new(0.1, 0.1, 0.4, 0.4),
            200.0,
            &ctl,
        )
        .unwrap();
        assert_eq!(r.relation, OrderRelation::StrictAll);
        assert!(r.max_defect > 0.1, "{r:?}");
        assert!(matches!(r.component, Some(ES) | Some(EI)));
    }
}
