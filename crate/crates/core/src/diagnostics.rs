//! Post-processing of trajectories: attractor extraction and spectral
//! probes, convergence between runs, almost-periodicity, and the mean-value
//! identities behind uniqueness.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::apsignal::{
    almost_period_check, fourier_coefficient, uniform_grid, AlmostPeriodCheck, ApSignal,
    SampledSignal, TimeWindow,
};
use crate::bracketing::RegionU;
use crate::error::{Error, Result};
use crate::integrate::{simulate, Trajectory};
use crate::model::{EnzymeParams, State4};
use crate::ode::StepControl;

/// Default fraction of a run discarded as transient.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.5;
/// Shortest retained tail accepted by [`extract_attractor`].
pub const MIN_TAIL_LENGTH: f64 = 100.0;
/// Gap below which two runs count as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 1.0e-4;
/// Probe frequency outside the module generated by `{1, π}`.
pub const CONTROL_FREQUENCY: f64 = std::f64::consts::SQRT_2;

/// `{0} ∪ {λᵢ} ∪ {2λᵢ} ∪ {λᵢ + λⱼ, |λᵢ − λⱼ|}`: the frequency module
/// generated by the inputs, truncated at order two, sorted and deduplicated.
pub fn frequency_module(inputs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for (i, &a) in inputs.iter().enumerate() {
        out.push(a);
        out.push(2.0 * a);
        for &b in &inputs[i + 1..] {
            out.push(a + b);
            out.push((a - b).abs());
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1.0e-9 * (1.0 + b.abs()));
    out
}

/// Fourier coefficients `c[c_σ, λ]` of the four coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub coefficients: [Complex64; 4],
}

impl SpectralLine {
    pub fn max_magnitude(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorEstimate {
    pub orbit: Trajectory,
    pub transient_cut: f64,
    pub lines: Vec<SpectralLine>,
    pub control: SpectralLine,
    /// Largest control-probe magnitude: leakage into a frequency absent from
    /// the module.
    pub control_residual: f64,
    /// `min_{t, σ} c_σ(t)` over the orbit.
    pub positivity_margin: f64,
}

impl AttractorEstimate {
    pub fn line(&self, frequency: f64) -> Option<&SpectralLine> {
        self.lines
            .iter()
            .find(|l| (l.frequency - frequency).abs() <= 1.0e-9 * (1.0 + frequency))
    }

    /// Largest distance of the orbit outside `region`.
    pub fn region_excess(&self, region: &RegionU) -> f64 {
        self.orbit
            .states
            .iter()
            .map(|s| region.excess(s))
            .fold(0.0, f64::max)
    }
}

/// Coordinate `index` of `traj` on a uniform grid: the trajectory's own grid
/// when uniform (a trailing off-grid sample is dropped), a re-sampling at its
/// first spacing otherwise.
pub fn uniform_component(traj: &Trajectory, index: usize) -> Result<SampledSignal> {
    let n = traj.len();
    for take in [n, n - 1] {
        if take >= 2 && uniform_grid(&traj.times[..take]).is_ok() {
            let v = traj.states[..take]
                .iter()
                .map(|s| s.to_array()[index])
                .collect();
            return SampledSignal::new(traj.times[0], traj.times[1] - traj.times[0], v);
        }
    }
    let step = traj.times[1] - traj.times[0];
    let window = TimeWindow::new(traj.start(), traj.end())?;
    SampledSignal::from_fn(window, step, |t| traj.state_at(t).to_array()[index])
}

/// Coefficients at `frequency`; nonzero frequencies are probed on the
/// mean-removed samples, which leaves the limit unchanged and removes the
/// `O(M[φ]/(λW))` leakage of the constant part on a finite window.
fn probe(
    components: &[SampledSignal],
    means: &[f64; 4],
    frequency: f64,
    window: TimeWindow,
) -> Result<SpectralLine> {
    let mut coefficients = [Complex64::default(); 4];
    for (c, s) in components.iter().enumerate() {
        coefficients[c] = if frequency == 0.0 {
            Complex64::new(means[c], 0.0)
        } else {
            let mut centred = s.clone();
            centred.values.iter_mut().for_each(|v| *v -= means[c]);
            fourier_coefficient(&centred, frequency, window)?
        };
    }
    Ok(SpectralLine {
        frequency,
        coefficients,
    })
}

/// Drops the first `transient_fraction` of `traj` and probes the tail at the
/// module generated by `input_frequencies` plus [`CONTROL_FREQUENCY`].
pub fn extract_attractor(
    traj: &Trajectory,
    transient_fraction: f64,
    input_frequencies: &[f64],
) -> Result<AttractorEstimate> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::param(
            "transient_fraction",
            format!("{transient_fraction} must lie in [0, 1)"),
        ));
    }
    let cut = traj.start() + transient_fraction * (traj.end() - traj.start());
    let orbit = traj.tail_from(cut)?;
    let length = orbit.end() - orbit.start();
    if length < MIN_TAIL_LENGTH {
        return Err(Error::TrajectoryTooShort(format!(
            "retained tail covers {length} time units, need {MIN_TAIL_LENGTH}"
        )));
    }
    let components: Vec<SampledSignal> = (0..4)
        .map(|c| uniform_component(&orbit, c))
        .collect::<Result<_>>()?;
    let window = TimeWindow::new(components[0].start, components[0].end())?;
    let mut means = [0.0; 4];
    for (m, s) in means.iter_mut().zip(&components) {
        *m = fourier_coefficient(s, 0.0, window)?.re;
    }
    let lines = frequency_module(input_frequencies)
        .into_par_iter()
        .map(|f| probe(&components, &means, f, window))
        .collect::<Result<Vec<_>>>()?;
    let control = probe(&components, &means, CONTROL_FREQUENCY, window)?;
    Ok(AttractorEstimate {
        transient_cut: cut,
        positivity_margin: orbit.min_component(),
        control_residual: control.max_magnitude(),
        lines,
        control,
        orbit,
    })
}

/// Largest coefficient difference between matching lines of two estimates.
pub fn spectral_distance(a: &AttractorEstimate, b: &AttractorEstimate) -> f64 {
    a.lines
        .iter()
        .filter_map(|la| b.line(la.frequency).map(|lb| (la, lb)))
        .flat_map(|(la, lb)| (0..4).map(move |c| (la.coefficients[c] - lb.coefficients[c]).norm()))
        .fold(0.0, f64::max)
}

/// Windowed means `M[V_σ]` along an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanValueResiduals {
    pub window: TimeWindow,
    /// `(1/W) ∫_W V_σ(t, c(t)) dt` by Simpson's rule.
    pub r: [f64; 4],
    /// `(c_σ(t₁) − c_σ(t₀))/W`, the same mean by telescoping.
    pub telescoped: [f64; 4],
    /// `(max c_σ − min c_σ)/W`, bounding `|M[V_σ]|` on the window.
    pub bound: [f64; 4],
    /// `r_S + r_ES = −k₃ M[c_ES] + M[F_S] − ξ_S M[c_S]`.
    pub combined_s: f64,
    /// `r_I + r_EI = M[F_I] − ξ_I M[c_I]`.
    pub combined_i: f64,
}

impl MeanValueResiduals {
    pub fn max_residual(&self) -> f64 {
        self.r.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn max_combined(&self) -> f64 {
        self.combined_s.abs().max(self.combined_i.abs())
    }

    /// Every `|r_σ|` within its telescoping bound (plus quadrature slack).
    pub fn within_bound(&self, slack: f64) -> bool {
        (0..4).all(|c| self.r[c].abs() <= self.bound[c] + slack)
    }
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    if n % 2 == 1 {
        // Simpson on the even part, trapezoid on the last panel.
        return simpson(&values[..n], h) + 0.5 * h * (values[n - 1] + values[n]);
    }
    if n == 0 {
        return 0.0;
    }
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * values[i])
        .sum();
    (values[0] + inner + values[n]) * h / 3.0
}

/// Means of the four components of `V(t, c(t))` over `window`.
pub fn meanvalue_residuals(
    orbit: &Trajectory,
    params: &EnzymeParams,
    window: TimeWindow,
) -> Result<MeanValueResiduals> {
    let slack = 1.0e-9 * (1.0 + window.end.abs());
    if window.start < orbit.start() - slack || window.end > orbit.end() + slack {
        return Err(Error::WindowNotCovered {
            start: window.start,
            end: window.end,
            first: orbit.start(),
            last: orbit.end(),
        });
    }
    let i0 = orbit.times.partition_point(|&t| t < window.start - slack);
    let i1 = orbit.times.partition_point(|&t| t <= window.end + slack) - 1;
    if i1 <= i0 {
        return Err(Error::EmptyWindow(window.length()));
    }
    let times = &orbit.times[i0..=i1];
    let states = &orbit.states[i0..=i1];
    let length = times[times.len() - 1] - times[0];
    let uniform = uniform_grid(times).ok();
    let mut r = [0.0; 4];
    let mut telescoped = [0.0; 4];
    let mut bound = [0.0; 4];
    let fields: Vec<[f64; 4]> = times
        .iter()
        .zip(states)
        .map(|(&t, s)| params.vector_field(t, s).to_array())
        .collect();
    for c in 0..4 {
        let v: Vec<f64> = fields.iter().map(|f| f[c]).collect();
        let integral = match uniform {
            Some((_, h)) => simpson(&v, h),
            None => times
                .windows(2)
                .zip(v.windows(2))
                .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
                .sum(),
        };
        r[c] = integral / length;
        let x: Vec<f64> = states.iter().map(|s| s.to_array()[c]).collect();
        telescoped[c] = (x[x.len() - 1] - x[0]) / length;
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        bound[c] = (hi - lo) / length;
    }
    Ok(MeanValueResiduals {
        window: TimeWindow {
            start: times[0],
            end: times[times.len() - 1],
        },
        r,
        telescoped,
        bound,
        combined_s: r[0] + r[2],
        combined_i: r[1] + r[3],
    })
}

/// Mean-value differences between two orbits on a common window and the
/// linear identities they satisfy when both are almost periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessIdentities {
    /// `δ_σ = M[c_σ^a] − M[c_σ^b]`.
    pub delta: [f64; 4],
    /// `ξ_S δ_S + k₃ δ_ES`, which vanishes for two almost-periodic solutions.
    pub substrate: f64,
    /// `ξ_S δ_S + (k₂+k₃) δ_ES`, the combination as printed in the source
    /// derivation; it differs from `substrate` by `k₂ δ_ES`.
    pub substrate_as_printed: f64,
    /// `ξ_I δ_I`, which vanishes likewise.
    pub inhibitor: f64,
}

pub fn uniqueness_identities(
    a: &Trajectory,
    b: &Trajectory,
    params: &EnzymeParams,
    window: TimeWindow,
) -> Result<UniquenessIdentities> {
    let mean = |tr: &Trajectory| -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (c, o) in out.iter_mut().enumerate() {
            let s = uniform_component(tr, c)?;
            *o = crate::apsignal::mean_value_empirical(&s, window)?.value;
        }
        Ok(out)
    };
    let (ma, mb) = (mean(a)?, mean(b)?);
    let delta: [f64; 4] = std::array::from_fn(|c| ma[c] - mb[c]);
    Ok(UniquenessIdentities {
        delta,
        substrate: params.xi_s * delta[0] + params.k3 * delta[2],
        substrate_as_printed: params.xi_s * delta[0] + (params.k2 + params.k3) * delta[2],
        inhibitor: params.xi_i * delta[1],
    })
}

/// Result of a residual-halving check across a window doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalvingCheck {
    pub single: MeanValueResiduals,
    pub double: MeanValueResiduals,
    /// `|r(2W)| ≤ bound(W)/2 + slack` for every component, with the combined
    /// identities held to the sum of their components' bounds.
    pub halves: bool,
}

/// Compares residuals over `[t₀, t₀+W]` and `[t₀, t₀+2W]` against the
/// telescoping bound, which halves exactly when the window doubles.
pub fn residual_halving(
    orbit: &Trajectory,
    params: &EnzymeParams,
    start: f64,
    window_length: f64,
    slack: f64,
) -> Result<HalvingCheck> {
    let single = meanvalue_residuals(
        orbit,
        params,
        TimeWindow::new(start, start + window_length)?,
    )?;
    let double = meanvalue_residuals(
        orbit,
        params,
        TimeWindow::new(start, start + 2.0 * window_length)?,
    )?;
    let half: [f64; 4] = std::array::from_fn(|c| 0.5 * single.bound[c] + slack);
    let halves = (0..4).all(|c| double.r[c].abs() <= half[c])
        && double.combined_s.abs() <= half[0] + half[2]
        && double.combined_i.abs() <= half[1] + half[3];
    Ok(HalvingCheck {
        single,
        double,
        halves,
    })
}

/// Pointwise sup-norm distance between two runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCurve {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    /// First time with gap below [`CONVERGENCE_THRESHOLD`].
    pub time_to_threshold: Option<f64>,
    /// Time after which the gap stays below the threshold.
    pub settled_at: Option<f64>,
    /// Start of the final stretch on which the gap never increases by more
    /// than round-off.
    pub monotone_from: f64,
}

impl ConvergenceCurve {
    pub fn max_gap_after(&self, from: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.gaps)
            .filter(|(t, _)| **t >= from)
            .map(|(_, g)| *g)
            .fold(0.0, f64::max)
    }
}

/// `‖a(t) − b(t)‖_∞` on the grid of `a` (restricted to the common span),
/// re-interpolating `b` when the grids differ.
pub fn convergence_metric(a: &Trajectory, b: &Trajectory) -> Result<ConvergenceCurve> {
    let same_grid = a.times == b.times;
    let (lo, hi) = (a.start().max(b.start()), a.end().min(b.end()));
    if !(hi > lo) {
        return Err(Error::WindowNotCovered {
            start: a.start(),
            end: a.end(),
            first: b.start(),
            last: b.end(),
        });
    }
    let mut times = Vec::new();
    let mut gaps = Vec::new();
    for (k, (&t, sa)) in a.times.iter().zip(&a.states).enumerate() {
        if t < lo || t > hi {
            continue;
        }
        let sb = if same_grid {
            b.states[k]
        } else {
            b.state_at(t)
        };
        let gap = sa
            .to_array()
            .iter()
            .zip(sb.to_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        times.push(t);
        gaps.push(gap);
    }
    let time_to_threshold = gaps
        .iter()
        .position(|&g| g < CONVERGENCE_THRESHOLD)
        .map(|k| times[k]);
    let last_above = gaps.iter().rposition(|&g| g >= CONVERGENCE_THRESHOLD);
    let settled_at = match last_above {
        None => times.first().copied(),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    };
    let tol = 1.0e-13;
    let mut m = gaps.len().saturating_sub(1);
    while m > 0 && gaps[m] <= gaps[m - 1] + tol {
        m -= 1;
    }
    let monotone_from = times.get(m).copied().unwrap_or(lo);
    Ok(ConvergenceCurve {
        times,
        gaps,
        time_to_threshold,
        settled_at,
        monotone_from,
    })
}

/// Latin-hypercube sample of `n` states in the box `[lower, upper]`.
pub fn latin_hypercube(n: usize, lower: State4, upper: State4, seed: u64) -> Vec<State4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (lower.to_array(), upper.to_array());
    let mut columns: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(&mut rng);
            strata
                .into_iter()
                .map(|k| {
                    let u = (k as f64 + rng.gen::<f64>()) / n as f64;
                    lo[c] + u * (hi[c] - lo[c])
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| State4::from_array(std::array::from_fn(|c| std::mem::take(&mut columns[c][i]))))
        .collect()
}

/// Simulates every initial state in parallel; results keep input order.
pub fn simulate_batch(
    params: &EnzymeParams,
    initials: &[State4],
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<Vec<Trajectory>> {
    initials
        .par_iter()
        .map(|&x0| simulate(params, x0, t0, t1, control))
        .collect()
}

/// Like [`simulate_batch`], also integrating the product `c_P` from zero.
pub fn simulate_batch_with_product(
    params: &EnzymeParams,
    initials: &[State4],
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<Vec<Trajectory>> {
    initials
        .par_iter()
        .map(|&x0| crate::integrate::simulate_with_product(params, x0, 0.0, t0, t1, control))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionReport {
    pub tail_start: f64,
    /// Largest pairwise sup-norm gap on the tail.
    pub max_tail_gap: f64,
    pub worst_pair: (usize, usize),
    /// Smallest coordinate of any run on the tail.
    pub tail_min_component: f64,
    /// Latest time at which a pair was still above the threshold.
    pub latest_settle_time: Option<f64>,
}

/// Pairwise convergence of runs on a common grid over the tail
/// `t ≥ tail_start`.
pub fn attraction_report(runs: &[Trajectory], tail_start: f64) -> Result<AttractionReport> {
    if runs.len() < 2 {
        return Err(Error::param("runs", "need at least two trajectories"));
    }
    let pairs: Vec<(usize, usize)> = (0..runs.len())
        .flat_map(|i| (i + 1..runs.len()).map(move |j| (i, j)))
        .collect();
    let curves = pairs
        .par_iter()
        .map(|&(i, j)| convergence_metric(&runs[i], &runs[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut report = AttractionReport {
        tail_start,
        max_tail_gap: 0.0,
        worst_pair: pairs[0],
        tail_min_component: f64::INFINITY,
        latest_settle_time: Some(f64::NEG_INFINITY),
    };
    for (pair, curve) in pairs.iter().zip(&curves) {
        let g = curve.max_gap_after(tail_start);
        if g > report.max_tail_gap {
            report.max_tail_gap = g;
            report.worst_pair = *pair;
        }
        report.latest_settle_time = match (report.latest_settle_time, curve.settled_at) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
    }
    for r in runs {
        let tail = r.tail_from(tail_start)?;
        report.tail_min_component = report.tail_min_component.min(tail.min_component());
    }
    Ok(report)
}

/// A translation number that is a simultaneous ε-almost-period of several
/// signals, certified by the exact bound `Σ 2A|sin(λτ/2)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonAlmostPeriod {
    pub tau: f64,
    pub epsilon: f64,
    /// Largest translation defect bound among the signals at `tau`.
    pub defect: f64,
}

/// Scans `[tau_min, tau_max]` with spacing `step` and returns the first τ
/// at which every signal's translation defect bound is below `epsilon`.
/// Each grid-local minimum that could dip below `epsilon` (given the bound's
/// Lipschitz constant `Σ A·λ`) is refined by golden-section search.
pub fn common_almost_period(
    signals: &[&ApSignal],
    epsilon: f64,
    tau_min: f64,
    tau_max: f64,
    step: f64,
) -> Option<CommonAlmostPeriod> {
    let worst = |tau: f64| {
        signals
            .iter()
            .map(|s| s.translation_defect_bound(tau))
            .fold(0.0, f64::max)
    };
    let lipschitz = signals
        .iter()
        .map(|s| {
            s.terms()
                .iter()
                .map(|h| h.amplitude() * h.frequency)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let slack = lipschitz * step;
    let n = ((tau_max - tau_min) / step).ceil() as usize;
    let at = |k: usize| tau_min + k as f64 * step;
    let (mut prev, mut cur) = (f64::INFINITY, worst(at(0)));
    for k in 0..=n {
        let next = if k < n {
            worst(at(k + 1))
        } else {
            f64::INFINITY
        };
        if cur <= prev && cur <= next && cur < epsilon + slack {
            let (mut a, mut b) = (at(k.saturating_sub(1)), at(k + 1));
            let r = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let (c, d) = (b - r * (b - a), a + r * (b - a));
                if worst(c) < worst(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let tau = 0.5 * (a + b);
            let defect = worst(tau);
            if defect < epsilon {
                return Some(CommonAlmostPeriod {
                    tau,
                    epsilon,
                    defect,
                });
            }
        }
        prev = cur;
        cur = next;
    }
    None
}

/// `almost_period_check` on every coordinate of the orbit; the reported
/// deviation is the worst across coordinates.
pub fn orbit_almost_period(
    orbit: &Trajectory,
    tau: f64,
    epsilon: f64,
) -> Result<AlmostPeriodCheck> {
    let mut worst: Option<AlmostPeriodCheck> = None;
    for c in 0..4 {
        let s = uniform_component(orbit, c)?;
        let check = almost_period_check(&s, tau, epsilon)?;
        if worst.is_none_or(|w| check.max_deviation > w.max_deviation) {
            worst = Some(check);
        }
    }
    Ok(worst.expect("four coordinates"))
}
