//! Adaptive Dormand–Prince 5(4) integration with Hermite-based dense output.

use serde::Serialize;

use crate::error::{Error, Result};

/// Right-hand side `ẋ = f(t, x)` of an `N`-dimensional system.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, x: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, x: &[f64; N]) -> [f64; N] {
        self(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Spacing of the dense output grid.
    pub output_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1.0e-9,
            atol: 1.0e-12,
            max_step: 0.1,
            output_step: 0.01,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_output_step(mut self, output_step: f64) -> Self {
        self.output_step = output_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("max_step", self.max_step),
            ("output_step", self.output_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest unscaled local error estimate over accepted steps.
    pub max_local_error: f64,
}

/// Dense output on a uniform grid.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: StepStats,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(x: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *x;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Cubic Hermite interpolation between `(t0, x0, f0)` and `(t1, x1, f1)`.
pub fn hermite<const N: usize>(
    t0: f64,
    x0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    x1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * x0[i] + h10 * h * f0[i] + h01 * x1[i] + h11 * h * f1[i])
}

/// Integrates `system` from `(t0, x0)` to `t1`, reporting the state on the
/// grid `t0 + k·output_step` (plus `t1` itself).
pub fn integrate<const N: usize, F: OdeSystem<N>>(
    system: &F,
    x0: [f64; N],
    t0: f64,
    t1: f64,
    control: &StepControl,
) -> Result<Solution<N>> {
    control.validate()?;
    if !(t1 > t0) {
        return Err(Error::param(
            "horizon",
            format!("t1 = {t1} must exceed t0 = {t0}"),
        ));
    }
    let n_out = ((t1 - t0) / control.output_step).floor() as usize;
    let mut out_times: Vec<f64> = (0..=n_out)
        .map(|k| t0 + k as f64 * control.output_step)
        .collect();
    if t1 - out_times[n_out] > 1.0e-9 * control.output_step {
        out_times.push(t1);
    } else {
        out_times[n_out] = t1;
    }

    let mut stats = StepStats::default();
    let mut states = Vec::with_capacity(out_times.len());
    states.push(x0);
    let mut next_out = 1;

    let mut t = t0;
    let mut x = x0;
    let mut f = system.rhs(t, &x);
    stats.rhs_evaluations += 1;
    let mut h = initial_step(system, t, &x, &f, control, &mut stats).min(t1 - t0);

    while next_out < out_times.len() {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(Error::StepUnderflow {
                t,
                step: h,
                state: x.to_vec(),
            });
        }
        if h < 1.0e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow {
                t,
                step: h,
                state: x.to_vec(),
            });
        }
        let h_step = h.min(t1 - t);

        let k1 = f;
        let k2 = system.rhs(t + C2 * h_step, &axpy(&x, h_step, &[(A21, &k1)]));
        let k3 = system.rhs(
            t + C3 * h_step,
            &axpy(&x, h_step, &[(A31, &k1), (A32, &k2)]),
        );
        let k4 = system.rhs(
            t + C4 * h_step,
            &axpy(&x, h_step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = system.rhs(
            t + C5 * h_step,
            &axpy(
                &x,
                h_step,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            ),
        );
        let k6 = system.rhs(
            t + h_step,
            &axpy(
                &x,
                h_step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let x_new = axpy(
            &x,
            h_step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = system.rhs(t + h_step, &x_new);
        stats.rhs_evaluations += 6;

        let mut err_sq = 0.0;
        let mut err_abs = 0.0f64;
        for i in 0..N {
            let e = h_step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = control.atol + control.rtol * x[i].abs().max(x_new[i].abs());
            err_sq += (e / sc).powi(2);
            err_abs = err_abs.max(e.abs());
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            stats.max_local_error = stats.max_local_error.max(err_abs);
            let t_new = if t1 - (t + h_step) <= 1.0e-12 * t1.abs().max(1.0) {
                t1
            } else {
                t + h_step
            };
            if next_out < out_times.len() && out_times[next_out] <= t_new {
                // cubic Hermite plus the fourth-order Dormand–Prince correction
                let h_acc = t_new - t;
                let corr = axpy(
                    &[0.0; N],
                    h_acc,
                    &[
                        (D1, &k1),
                        (D3, &k3),
                        (D4, &k4),
                        (D5, &k5),
                        (D6, &k6),
                        (D7, &k7),
                    ],
                );
                while next_out < out_times.len() && out_times[next_out] <= t_new {
                    let to = out_times[next_out];
                    states.push(if to == t_new {
                        x_new
                    } else {
                        let th = (to - t) / h_acc;
                        let th1 = 1.0 - th;
                        std::array::from_fn(|i| {
                            let diff = x_new[i] - x[i];
                            let bspl = h_acc * k1[i] - diff;
                            let tail = diff - h_acc * k7[i] - bspl;
                            x[i] + th * (diff + th1 * (bspl + th * (tail + th1 * corr[i])))
                        })
                    });
                    next_out += 1;
                }
            }
            t = t_new;
            x = x_new;
            f = k7;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h_step * factor).min(control.max_step);
        } else {
            stats.rejected += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = h_step * factor;
        }
    }

    Ok(Solution {
        times: out_times,
        states,
        stats,
    })
}

/// Starting step from the usual two-evaluation heuristic.
fn initial_step<const N: usize, F: OdeSystem<N>>(
    system: &F,
    t: f64,
    x: &[f64; N],
    f: &[f64; N],
    control: &StepControl,
    stats: &mut StepStats,
) -> f64 {
    let scale = |i: usize| control.atol + control.rtol * x[i].abs();
    let rms =
        |v: &dyn Fn(usize) -> f64| ((0..N).map(|i| v(i).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(&|i| x[i] / scale(i));
    let d1 = rms(&|i| f[i] / scale(i));
    let h0 = if d0 < 1.0e-5 || d1 < 1.0e-5 {
        1.0e-6
    } else {
        0.01 * d0 / d1
    };
    let x1 = axpy(x, h0, &[(1.0, f)]);
    let f1 = system.rhs(t + h0, &x1);
    stats.rhs_evaluations += 1;
    let d2 = rms(&|i| (f1[i] - f[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1.0e-15 {
        (h0 * 1.0e-3).max(1.0e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(control.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let sys = |_t: f64, x: &[f64; 1]| [-x[0]];
        let sol = integrate(
            &sys,
            [1.0],
            0.0,
            5.0,
            &StepControl::with_tolerances(1e-10, 1e-13),
        )
        .unwrap();
        for (t, x) in sol.times.iter().zip(&sol.states) {
            assert!((x[0] - (-t).exp()).abs() < 1e-9, "t={t}");
        }
        assert_eq!(*sol.times.last().unwrap(), 5.0);
        assert_eq!(sol.times.len(), 501);
    }

    #[test]
    fn harmonic_oscillator_keeps_energy() {
        let sys = |_t: f64, x: &[f64; 2]| [x[1], -x[0]];
        let sol = integrate(&sys, [1.0, 0.0], 0.0, 50.0, &StepControl::default()).unwrap();
        let last = sol.states.last().unwrap();
        assert!((last[0] - 50f64.cos()).abs() < 1e-7);
        assert!((last[1] + 50f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn off_grid_horizon_is_appended() {
        let sys = |_t: f64, _x: &[f64; 1]| [1.0];
        let ctl = StepControl::default().with_output_step(0.3);
        let sol = integrate(&sys, [0.0], 0.0, 1.0, &ctl).unwrap();
        assert_eq!(sol.times.len(), 5);
        assert!((sol.times[3] - 0.9).abs() < 1e-15);
        assert_eq!(sol.times[4], 1.0);
        assert!((sol.states.last().unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_empty_horizon_and_bad_tolerances() {
        let sys = |_t: f64, x: &[f64; 1]| [-x[0]];
        assert!(integrate(&sys, [1.0], 1.0, 1.0, &StepControl::default()).is_err());
        let bad = StepControl::with_tolerances(0.0, 1e-12);
        assert!(integrate(&sys, [1.0], 0.0, 1.0, &bad).is_err());
    }

    #[test]
    fn blow_up_reports_underflow() {
        // ẋ = x², x(0) = 1 explodes at t = 1
        let sys = |_t: f64, x: &[f64; 1]| [x[0] * x[0]];
        let err = integrate(&sys, [1.0], 0.0, 2.0, &StepControl::default()).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }), "{err:?}");
    }
}
