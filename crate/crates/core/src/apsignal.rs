//! Almost-periodic signals realized as finite trigonometric polynomials.
//!
//! An [`ApSignal`] is `offset + Σ (a_k cos λ_k t + b_k sin λ_k t)` with
//! arbitrary, pairwise distinct, strictly positive real frequencies. The
//! exact Bohr mean of such a signal is its offset; the empirical operations
//! in this module ([`mean_value_empirical`], [`fourier_coefficient`]) work on
//! uniformly sampled data and are what gets applied to numerically computed
//! trajectories, where no closed form exists.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default quadrature step used when the caller does not supply one.
pub const DEFAULT_QUADRATURE_STEP: f64 = 0.01;

/// Default averaging window for empirical means.
pub const DEFAULT_MEAN_WINDOW: f64 = 1.0e4;

/// Number of slowest periods a window must span before its mean is trusted.
pub const MIN_WINDOW_PERIODS: f64 = 10.0;

/// Frequencies closer than this (relative) are merged by algebraic operations.
const FREQUENCY_MERGE_TOL: f64 = 1.0e-12;

/// One harmonic `cos_coeff·cos(frequency·t) + sin_coeff·sin(frequency·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub frequency: f64,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

impl Harmonic {
    pub fn new(frequency: f64, cos_coeff: f64, sin_coeff: f64) -> Self {
        Self {
            frequency,
            cos_coeff,
            sin_coeff,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.cos_coeff.hypot(self.sin_coeff)
    }

    /// Complex Fourier coefficient at `+frequency`, i.e. `(a - i b) / 2`.
    pub fn coefficient(&self) -> Complex64 {
        Complex64::new(0.5 * self.cos_coeff, -0.5 * self.sin_coeff)
    }
}

/// A finite trigonometric polynomial with real frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal", into = "RawSignal")]
pub struct ApSignal {
    offset: f64,
    terms: Vec<Harmonic>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    offset: f64,
    #[serde(default)]
    terms: Vec<(f64, f64, f64)>,
}

impl TryFrom<RawSignal> for ApSignal {
    type Error = Error;

    fn try_from(raw: RawSignal) -> Result<Self> {
        let terms = raw
            .terms
            .into_iter()
            .map(|(f, a, b)| Harmonic::new(f, a, b))
            .collect();
        ApSignal::new(raw.offset, terms)
    }
}

impl From<ApSignal> for RawSignal {
    fn from(s: ApSignal) -> Self {
        RawSignal {
            offset: s.offset,
            terms: s
                .terms
                .iter()
                .map(|h| (h.frequency, h.cos_coeff, h.sin_coeff))
                .collect(),
        }
    }
}

impl ApSignal {
    /// Builds a signal, rejecting non-finite values, non-positive frequencies
    /// and repeated frequencies.
    pub fn new(offset: f64, terms: Vec<Harmonic>) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidSignal(format!(
                "offset {offset} is not finite"
            )));
        }
        for (k, h) in terms.iter().enumerate() {
            if !(h.frequency.is_finite() && h.frequency > 0.0) {
                return Err(Error::InvalidSignal(format!(
                    "term {k}: frequency {} must be finite and > 0 (put the λ=0 part in the offset)",
                    h.frequency
                )));
            }
            if !(h.cos_coeff.is_finite() && h.sin_coeff.is_finite()) {
                return Err(Error::InvalidSignal(format!(
                    "term {k}: non-finite coefficient"
                )));
            }
            if let Some(j) = terms[..k].iter().position(|o| o.frequency == h.frequency) {
                return Err(Error::InvalidSignal(format!(
                    "terms {j} and {k} share frequency {}",
                    h.frequency
                )));
            }
        }
        Ok(Self { offset, terms })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            offset: value,
            terms: Vec::new(),
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn terms(&self) -> &[Harmonic] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|h| h.amplitude() == 0.0)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|h| h.frequency)
    }

    pub fn min_frequency(&self) -> Option<f64> {
        self.frequencies().reduce(f64::min)
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.frequencies().reduce(f64::max)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.offset, |acc, h| {
            let (s, c) = (h.frequency * t).sin_cos();
            acc + h.cos_coeff * c + h.sin_coeff * s
        })
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().fold(0.0, |acc, h| {
            let (s, c) = (h.frequency * t).sin_cos();
            acc + h.frequency * (h.sin_coeff * c - h.cos_coeff * s)
        })
    }

    /// Bohr mean value. For a trigonometric polynomial this is the offset.
    pub fn mean_value_exact(&self) -> f64 {
        self.offset
    }

    /// `|offset| + Σ amplitudes`: bounds `|φ(t)|` for every `t`.
    pub fn magnitude_bound(&self) -> f64 {
        self.offset.abs() + self.amplitude_sum()
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.terms.iter().map(Harmonic::amplitude).sum()
    }

    /// Upper coefficient bound `offset + Σ amplitudes` on the supremum.
    pub fn coefficient_bound(&self) -> f64 {
        self.offset + self.amplitude_sum()
    }

    /// Analytic Fourier coefficient `c[φ, λ]`; zero off the spectrum.
    pub fn coefficient_at(&self, frequency: f64) -> Complex64 {
        if frequency == 0.0 {
            return Complex64::new(self.offset, 0.0);
        }
        let target = frequency.abs();
        self.terms
            .iter()
            .find(|h| (h.frequency - target).abs() <= FREQUENCY_MERGE_TOL * target)
            .map(|h| {
                let c = h.coefficient();
                if frequency > 0.0 {
                    c
                } else {
                    c.conj()
                }
            })
            .unwrap_or_default()
    }

    /// `Σ_λ |c[φ, λ]|²` over all (positive and negative) frequencies, which
    /// Parseval's identity equates with `M[|φ|²]`.
    pub fn coefficient_energy(&self) -> f64 {
        self.offset * self.offset
            + self
                .terms
                .iter()
                .map(|h| 0.5 * (h.cos_coeff * h.cos_coeff + h.sin_coeff * h.sin_coeff))
                .sum::<f64>()
    }

    /// Upper bound on `|M_W[φ] − M[φ]|` for the windowed mean over any window
    /// of length `window_length`: each harmonic integrates to at most
    /// `2·amplitude/λ` over an arbitrary interval.
    pub fn mean_error_bound(&self, window_length: f64) -> f64 {
        self.terms
            .iter()
            .map(|h| 2.0 * h.amplitude() / h.frequency)
            .sum::<f64>()
            / window_length
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            offset: self.offset * factor,
            terms: self
                .terms
                .iter()
                .map(|h| Harmonic::new(h.frequency, h.cos_coeff * factor, h.sin_coeff * factor))
                .collect(),
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut acc = SpectrumAccumulator::new(self.offset + other.offset);
        for h in self.terms.iter().chain(other.terms.iter()) {
            acc.add(h.frequency, h.cos_coeff, h.sin_coeff);
        }
        acc.finish()
    }

    /// Pointwise product, expanded back into a trigonometric polynomial.
    pub fn product(&self, other: &Self) -> Self {
        let mut acc = SpectrumAccumulator::new(self.offset * other.offset);
        for h in &other.terms {
            acc.add(
                h.frequency,
                self.offset * h.cos_coeff,
                self.offset * h.sin_coeff,
            );
        }
        for h in &self.terms {
            acc.add(
                h.frequency,
                other.offset * h.cos_coeff,
                other.offset * h.sin_coeff,
            );
        }
        for p in &self.terms {
            for q in &other.terms {
                let (a, b, c, d) = (p.cos_coeff, p.sin_coeff, q.cos_coeff, q.sin_coeff);
                acc.add(
                    p.frequency - q.frequency,
                    0.5 * (a * c + b * d),
                    0.5 * (b * c - a * d),
                );
                acc.add(
                    p.frequency + q.frequency,
                    0.5 * (a * c - b * d),
                    0.5 * (a * d + b * c),
                );
            }
        }
        acc.finish()
    }

    /// Exact `sup_t |φ(t+τ) − φ(t)|` bound: `Σ amplitude_k · 2|sin(λ_k τ/2)|`.
    /// Tight for a single harmonic.
    pub fn translation_defect_bound(&self, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|h| 2.0 * h.amplitude() * (0.5 * h.frequency * tau).sin().abs())
            .sum()
    }

    /// Quadrature step `min(2π/λ_max/32, user_step)`.
    pub fn quadrature_step(&self, user_step: f64) -> f64 {
        match self.max_frequency() {
            Some(lmax) => (2.0 * PI / lmax / 32.0).min(user_step),
            None => user_step,
        }
    }

    /// Samples the signal on a uniform grid covering `window`.
    pub fn sample(&self, window: TimeWindow, step: f64) -> SampledSignal {
        let n = (window.length() / step).round().max(1.0) as usize;
        let h = window.length() / n as f64;
        let values = (0..=n)
            .map(|i| self.evaluate(window.start + i as f64 * h))
            .collect();
        SampledSignal {
            start: window.start,
            step: h,
            values,
            slowest_frequency: self.min_frequency(),
        }
    }

    /// Common period if every frequency ratio is rational with a small
    /// denominator, `None` for (numerically) incommensurate spectra.
    pub fn common_period(&self) -> Option<f64> {
        let base = self.min_frequency()?;
        (1..=64u32).find_map(|q| {
            let all_integer = self.frequencies().all(|f| {
                let r = f / base * q as f64;
                (r - r.round()).abs() <= 1.0e-9 * r.max(1.0)
            });
            all_integer.then(|| 2.0 * PI * q as f64 / base)
        })
    }

    pub fn signal_bounds(&self, grid_resolution: f64) -> Result<SignalBounds> {
        self.signal_bounds_over(grid_resolution, None)
    }

    /// Estimates `sup φ` and `inf φ` by dense sampling plus ternary-search
    /// refinement around the best grid extrema.
    ///
    /// The sampled horizon is one common period when the spectrum is
    /// commensurate and `horizon` (default `10·2π/λ_min`) otherwise.
    pub fn signal_bounds_over(
        &self,
        grid_resolution: f64,
        horizon: Option<f64>,
    ) -> Result<SignalBounds> {
        if !(grid_resolution.is_finite() && grid_resolution > 0.0) {
            return Err(Error::param(
                "grid_resolution",
                format!("{grid_resolution} must be positive"),
            ));
        }
        let coefficient_bound = self.coefficient_bound();
        let lower_bound = self.offset - self.amplitude_sum();
        let Some(lmin) = self.min_frequency() else {
            return Ok(SignalBounds {
                sup_value: self.offset,
                inf_value: self.offset,
                grid_resolution,
                coefficient_bound,
                horizon: 0.0,
            });
        };
        let span = self
            .common_period()
            .unwrap_or_else(|| horizon.unwrap_or(MIN_WINDOW_PERIODS * 2.0 * PI / lmin));
        let n = (span / grid_resolution).ceil() as usize;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let t = i as f64 * grid_resolution;
                (t, self.evaluate(t))
            })
            .collect();

        let refine = |sign: f64| -> f64 {
            let f = |t: f64| sign * self.evaluate(t);
            let mut candidates: Vec<(f64, f64)> = samples
                .iter()
                .enumerate()
                .filter(|&(i, &(_, v))| {
                    let left = if i > 0 {
                        sign * samples[i - 1].1
                    } else {
                        f64::NEG_INFINITY
                    };
                    let right = samples.get(i + 1).map_or(f64::NEG_INFINITY, |s| sign * s.1);
                    sign * v >= left && sign * v >= right
                })
                .map(|(_, &(t, v))| (t, sign * v))
                .collect();
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
            candidates.truncate(16);
            candidates
                .iter()
                .map(|&(t, v)| ternary_max(f, t - grid_resolution, t + grid_resolution).max(v))
                .fold(f64::NEG_INFINITY, f64::max)
        };

        let sup_value = refine(1.0).min(coefficient_bound);
        let inf_value = (-refine(-1.0)).max(lower_bound);
        Ok(SignalBounds {
            sup_value,
            inf_value: inf_value.min(sup_value),
            grid_resolution,
            coefficient_bound,
            horizon: span,
        })
    }
}

/// Maximum of a unimodal function on `[lo, hi]` by golden-section search.
fn ternary_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1.0e-13 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(0.5 * (lo + hi)))
}

/// Collects harmonics keyed by frequency, merging coincident ones.
struct SpectrumAccumulator {
    offset: f64,
    terms: Vec<Harmonic>,
}

impl SpectrumAccumulator {
    fn new(offset: f64) -> Self {
        Self {
            offset,
            terms: Vec::new(),
        }
    }

    fn add(&mut self, frequency: f64, a: f64, b: f64) {
        let scale = frequency.abs().max(1.0);
        if frequency.abs() <= FREQUENCY_MERGE_TOL * scale {
            self.offset += a;
            return;
        }
        // cos is even, sin is odd
        let (f, b) = if frequency < 0.0 {
            (-frequency, -b)
        } else {
            (frequency, b)
        };
        match self
            .terms
            .iter_mut()
            .find(|h| (h.frequency - f).abs() <= FREQUENCY_MERGE_TOL * scale)
        {
            Some(h) => {
                h.cos_coeff += a;
                h.sin_coeff += b;
            }
            None => self.terms.push(Harmonic::new(f, a, b)),
        }
    }

    fn finish(mut self) -> ApSignal {
        self.terms
            .retain(|h| h.cos_coeff != 0.0 || h.sin_coeff != 0.0);
        self.terms
            .sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        ApSignal {
            offset: self.offset,
            terms: self.terms,
        }
    }
}

/// `u_* = inf φ` and `u* = sup φ` with the coefficient bound alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalBounds {
    pub sup_value: f64,
    pub inf_value: f64,
    pub grid_resolution: f64,
    pub coefficient_bound: f64,
    /// Time span that was searched.
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::EmptyWindow(end - start));
        }
        Ok(Self { start, end })
    }

    pub fn from_origin(length: f64) -> Result<Self> {
        Self::new(0.0, length)
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// A real signal sampled on a uniform grid `start + i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    /// Slowest frequency present, when known; drives the short-window flag.
    pub slowest_frequency: Option<f64>,
}

impl SampledSignal {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::param("step", format!("{step} must be positive")));
        }
        if values.len() < 2 {
            return Err(Error::param("values", "need at least two samples"));
        }
        Ok(Self {
            start,
            step,
            values,
            slowest_frequency: None,
        })
    }

    pub fn from_fn(window: TimeWindow, step: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = (window.length() / step).round().max(1.0) as usize;
        let h = window.length() / n as f64;
        Self::new(
            window.start,
            h,
            (0..=n).map(|i| f(window.start + i as f64 * h)).collect(),
        )
    }

    pub fn with_slowest_frequency(mut self, frequency: f64) -> Self {
        self.slowest_frequency = Some(frequency);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Four-point Lagrange interpolation; clamps outside the sampled range.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.values.len();
        let x = ((t - self.start) / self.step).clamp(0.0, (n - 1) as f64);
        if n < 4 {
            let i = (x.floor() as usize).min(n - 2);
            let w = x - i as f64;
            return self.values[i] * (1.0 - w) + self.values[i + 1] * w;
        }
        let i0 = (x.floor() as usize).saturating_sub(1).min(n - 4);
        let s = x - i0 as f64;
        let v = &self.values[i0..i0 + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }

    /// Grid indices `[i0, i1]` spanning `window`, snapped to the grid.
    pub(crate) fn index_range(&self, window: TimeWindow) -> Result<(usize, usize)> {
        let slack = 1.0e-9 * self.step;
        if window.start < self.start - slack || window.end > self.end() + slack {
            return Err(Error::WindowNotCovered {
                start: window.start,
                end: window.end,
                first: self.start,
                last: self.end(),
            });
        }
        let i0 = ((window.start - self.start) / self.step).round() as usize;
        let i1 = (((window.end - self.start) / self.step).round() as usize).min(self.len() - 1);
        if i1 <= i0 {
            return Err(Error::EmptyWindow(window.length()));
        }
        Ok((i0, i1))
    }

    fn window_is_short(&self, length: f64) -> bool {
        self.slowest_frequency
            .is_some_and(|f| length < MIN_WINDOW_PERIODS * 2.0 * PI / f)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.12e}", self.time(i)), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a two-column `(t, value)` CSV with a uniform time grid.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for rec in r.deserialize() {
            let (t, v): (f64, f64) = rec?;
            ts.push(t);
            vs.push(v);
        }
        uniform_grid(&ts).and_then(|(start, step)| Self::new(start, step, vs))
    }
}

/// `(start, step)` of a uniform grid, or an error if the spacing drifts.
pub(crate) fn uniform_grid(ts: &[f64]) -> Result<(f64, f64)> {
    if ts.len() < 2 {
        return Err(Error::param("t", "need at least two samples"));
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    let drift = ts
        .iter()
        .enumerate()
        .map(|(i, t)| (t - (ts[0] + i as f64 * step)).abs())
        .fold(0.0, f64::max);
    if !(step > 0.0) || drift > 1.0e-6 * step {
        return Err(Error::param(
            "t",
            "time column is not a uniform increasing grid",
        ));
    }
    Ok((ts[0], step))
}

/// Windowed time average with a flag for windows shorter than
/// [`MIN_WINDOW_PERIODS`] slowest periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMean {
    pub value: f64,
    pub window_length: f64,
    pub short_window: bool,
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let sum: f64 = values.iter().sum();
    step * (sum - 0.5 * (values[0] + values[values.len() - 1]))
}

/// `(1/|W|) ∫_W φ` by the composite trapezoid rule.
pub fn mean_value_empirical(samples: &SampledSignal, window: TimeWindow) -> Result<EmpiricalMean> {
    let (i0, i1) = samples.index_range(window)?;
    let length = (i1 - i0) as f64 * samples.step;
    let integral = trapezoid(&samples.values[i0..=i1], samples.step);
    Ok(EmpiricalMean {
        value: integral / length,
        window_length: length,
        short_window: samples.window_is_short(length),
    })
}

/// `(1/|W|) ∫_W φ(s) e^{−iλs} ds` by the composite trapezoid rule.
pub fn fourier_coefficient(
    samples: &SampledSignal,
    frequency: f64,
    window: TimeWindow,
) -> Result<Complex64> {
    let (i0, i1) = samples.index_range(window)?;
    let length = (i1 - i0) as f64 * samples.step;
    let weighted = |i: usize| {
        let (s, c) = (frequency * samples.time(i)).sin_cos();
        samples.values[i] * Complex64::new(c, -s)
    };
    let mut acc = Complex64::default();
    for i in i0..=i1 {
        acc += weighted(i);
    }
    acc -= 0.5 * (weighted(i0) + weighted(i1));
    Ok(acc * samples.step / length)
}

/// `|M_W[|φ|²] − Σ_λ |c[φ,λ]|²|` with the mean taken empirically over
/// `window` and the coefficient energy analytically.
pub fn parseval_defect(signal: &ApSignal, window: TimeWindow) -> Result<f64> {
    let step = signal.quadrature_step(DEFAULT_QUADRATURE_STEP);
    let squared = SampledSignal::from_fn(window, step, |t| signal.evaluate(t).powi(2))?;
    let mean = mean_value_empirical(&squared, window)?;
    Ok((mean.value - signal.coefficient_energy()).abs())
}

/// Outcome of an ε-almost-period test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlmostPeriodCheck {
    pub tau: f64,
    pub epsilon: f64,
    pub max_deviation: f64,
    pub overlap: f64,
    pub is_almost_period: bool,
}

/// Checks `sup |φ(t+τ) − φ(t)| < ε` over every grid time `t` for which
/// `t+τ` is still sampled; `φ(t+τ)` is interpolated with a cubic.
pub fn almost_period_check(
    samples: &SampledSignal,
    tau: f64,
    epsilon: f64,
) -> Result<AlmostPeriodCheck> {
    let overlap = samples.end() - tau.abs() - samples.start;
    if !(overlap >= samples.step) {
        return Err(Error::OverlapTooShort { tau, overlap });
    }
    let (lo, hi) = if tau >= 0.0 {
        (samples.start, samples.end() - tau)
    } else {
        (samples.start - tau, samples.end())
    };
    let max_deviation = samples
        .values
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let t = samples.time(i);
            t >= lo - 1.0e-12 && t <= hi + 1.0e-12
        })
        .map(|(i, v)| (samples.value_at(samples.time(i) + tau) - v).abs())
        .fold(0.0, f64::max);
    Ok(AlmostPeriodCheck {
        tau,
        epsilon,
        max_deviation,
        overlap,
        is_almost_period: max_deviation < epsilon,
    })
}
