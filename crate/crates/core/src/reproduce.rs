//! End-to-end studies behind `reproduce-paper`: each returns a structured
//! report and a pass/fail line, with thresholds taken from the run config.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::apsignal::almost_period_check;
use crate::apsignal::{
    fourier_coefficient, mean_value_empirical, parseval_defect, ApSignal, Harmonic, TimeWindow,
};
use crate::bracketing::{self, BracketSummary, Face, InflowSups};
use crate::config::{BoxConfig, BracketConfig, DiagnosticsConfig, RunConfig};
use crate::diagnostics::{
    attraction_report, common_almost_period, extract_attractor, meanvalue_residuals,
    orbit_almost_period, residual_halving, simulate_batch, spectral_distance, AttractionReport,
    CommonAlmostPeriod, HalvingCheck, MeanValueResiduals,
};
use crate::error::Result;
use crate::integrate::{
    choose_shift, monotone_iterate, order_preservation_test, simulate_lifted, IterationConfig,
    IterationRun, OrderPreservationReport, Trajectory,
};
use crate::model::{EnzymeParams, State4};
use crate::monotonicity::{
    check_intraspecific, check_monotone, EnzymeJacobian, MonotonicityReport, OrthantOrder,
    SignConvention, StateBox,
};
use crate::ode::StepControl;

/// One line of the acceptance summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn line(id: &str, name: &str, passed: bool, detail: String, start: Instant) -> CheckLine {
    CheckLine {
        id: id.into(),
        name: name.into(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityStudy {
    /// Intraspecific check on the stoichiometric box.
    pub stoichiometric: MonotonicityReport,
    /// The same check with `c_ES + c_EI ≤ extended_cap·T`.
    pub extended: MonotonicityReport,
    /// Off-diagonal check under the classical Kamke convention, for contrast.
    pub kamke: MonotonicityReport,
}

impl MonotonicityStudy {
    pub fn passed(&self) -> bool {
        self.stoichiometric.is_intraspecific
            && self.stoichiometric.min_margin >= 0.0
            && !self.extended.is_intraspecific
            && !self.extended.violations.is_empty()
    }
}

pub fn monotonicity_study(params: &EnzymeParams, cfg: &BoxConfig) -> Result<MonotonicityStudy> {
    let jac = EnzymeJacobian(params);
    let order = OrthantOrder::enzyme();
    let inner = StateBox::stoichiometric(params, cfg.s_max, cfg.i_max, cfg.enzyme_cap);
    let outer = StateBox::stoichiometric(params, cfg.s_max, cfg.i_max, cfg.extended_cap);
    Ok(MonotonicityStudy {
        stoichiometric: check_intraspecific(&jac, &inner, &order, cfg.convention, cfg.samples)?,
        extended: check_intraspecific(&jac, &outer, &order, cfg.convention, cfg.samples)?,
        kamke: check_monotone(&jac, &inner, &order, SignConvention::Kamke, cfg.samples)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketStudy {
    pub computed: BracketSummary,
    /// The same formulas evaluated at separately stated inflow suprema.
    pub stated: Option<BracketSummary>,
    /// Largest `ċ_S` seen on face C5 minus `−k₂T/2` (must be ≤ 1e-9).
    pub c5_excess: f64,
    pub c6_excess: f64,
}

/// Tolerance on the closed-form face margins C5/C6.
pub const FACE_MARGIN_TOLERANCE: f64 = 1.0e-9;

impl BracketStudy {
    pub fn vertices_pass(&self) -> bool {
        self.computed.sub_check.passed && self.computed.super_check.passed
    }

    pub fn faces_pass(&self) -> bool {
        self.computed.faces.all_passed()
            && self.c5_excess <= FACE_MARGIN_TOLERANCE
            && self.c6_excess <= FACE_MARGIN_TOLERANCE
    }

    pub fn failed_faces(&self) -> Vec<Face> {
        self.computed
            .faces
            .faces
            .iter()
            .filter(|f| !f.passed)
            .map(|f| f.face)
            .collect()
    }
}

pub fn bracket_study(params: &EnzymeParams, cfg: &BracketConfig) -> Result<BracketStudy> {
    let grid = bracketing::time_grid(0.0, cfg.horizon, cfg.time_step);
    let face_grid = bracketing::time_grid(0.0, cfg.face_horizon, cfg.face_time_step);
    let sups = InflowSups::computed(params)?;
    let computed = bracketing::summarize(params, sups, &grid, &face_grid, cfg.face_samples);
    let stated = match (cfg.stated_sup_s, cfg.stated_sup_i) {
        (None, None) => None,
        (s, i) => {
            let stated = InflowSups {
                sup_s: s.unwrap_or(sups.sup_s),
                sup_i: i.unwrap_or(sups.sup_i),
            };
            Some(bracketing::summarize(
                params,
                stated,
                &grid,
                &face_grid,
                cfg.face_samples,
            ))
        }
    };
    let t = params.total_enzyme;
    let c5 = computed.faces.face(Face::C5).extreme_derivative + params.k2 * t / 2.0;
    let c6 = computed.faces.face(Face::C6).extreme_derivative + params.k4 * t / 2.0;
    Ok(BracketStudy {
        computed,
        stated,
        c5_excess: c5,
        c6_excess: c6,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationStudy {
    pub horizon: f64,
    pub max_defect: f64,
}

/// Integrates the six-species system from the middle of the stoichiometric
/// region and measures `|c_E + c_ES + c_EI − T|`.
pub fn conservation_study(
    params: &EnzymeParams,
    x0: State4,
    horizon: f64,
    control: &StepControl,
) -> Result<ConservationStudy> {
    let lifted = simulate_lifted(params, params.lift(&x0, 0.0), 0.0, horizon, control)?;
    Ok(ConservationStudy {
        horizon,
        max_defect: lifted.max_conservation_defect(params.total_enzyme),
    })
}

/// `count` random pairs, each ordered `lower ⪯ upper` in the enzyme order,
/// drawn from `[0, s_max] × [0, i_max] × [0, T/2]²`.
pub fn random_ordered_pairs(
    count: usize,
    s_max: f64,
    i_max: f64,
    total_enzyme: f64,
    seed: u64,
) -> Vec<(State4, State4)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = [s_max, i_max, 0.5 * total_enzyme, 0.5 * total_enzyme];
    (0..count)
        .map(|_| {
            let a: [f64; 4] = std::array::from_fn(|c| rng.gen::<f64>() * hi[c]);
            let b: [f64; 4] = std::array::from_fn(|c| rng.gen::<f64>() * hi[c]);
            // Under ε = (−,−,+,+) the lower state has the larger substrate
            // and inhibitor and the smaller complexes.
            let lower = State4::new(
                a[0].max(b[0]),
                a[1].max(b[1]),
                a[2].min(b[2]),
                a[3].min(b[3]),
            );
            let upper = State4::new(
                a[0].min(b[0]),
                a[1].min(b[1]),
                a[2].max(b[2]),
                a[3].max(b[3]),
            );
            (lower, upper)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub reports: Vec<OrderPreservationReport>,
    pub max_defect: f64,
    pub worst_pair: usize,
}

pub fn order_study(
    params: &EnzymeParams,
    pairs: &[(State4, State4)],
    horizon: f64,
    control: &StepControl,
) -> Result<OrderStudy> {
    let reports = pairs
        .par_iter()
        .map(|(a, b)| order_preservation_test(params, *a, *b, horizon, control))
        .collect::<Result<Vec<_>>>()?;
    let (worst_pair, max_defect) = reports
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.max_defect))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(OrderStudy {
        reports,
        max_defect,
        worst_pair,
    })
}

/// Runs the monotone iteration from the vertex bracket with `L` from
/// `choose_shift` over `U ∩ {c_ES + c_EI ≤ T}` (or the configured override).
pub fn iteration_study(
    params: &EnzymeParams,
    cfg: &IterationConfig,
    shift: Option<f64>,
) -> Result<IterationRun> {
    let sups = InflowSups::computed(params)?;
    let pair = bracketing::BracketPair::from_vertices(params, sups);
    let l = match shift {
        Some(l) => l,
        None => {
            let u = bracketing::attractor_bounds(params, sups);
            choose_shift(
                params,
                &StateBox::stoichiometric(params, u.omega_star_s, u.omega_star_i, 1.0),
            )?
        }
    };
    monotone_iterate(params, pair.sub, pair.sup, l, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionStudy {
    pub initial_states: Vec<State4>,
    pub horizon: f64,
    pub report: AttractionReport,
    /// Largest pairwise difference of spectral lines across runs.
    pub spectral_spread: f64,
    /// Largest control-probe magnitude across runs.
    pub control_residual: f64,
    pub forcing_period: Option<CommonAlmostPeriod>,
    /// Worst translation defect of the tail at `forcing_period`.
    pub orbit_defect: Option<f64>,
    /// Largest excursion of any tail outside the region `U`.
    pub region_excess: f64,
}

impl AttractionStudy {
    pub fn attraction_passed(&self, cfg: &DiagnosticsConfig) -> bool {
        self.report.max_tail_gap < cfg.gap_threshold && self.report.tail_min_component > 0.0
    }

    pub fn almost_periodicity_passed(&self, cfg: &DiagnosticsConfig) -> bool {
        self.spectral_spread < cfg.spectral_tolerance
            && self.control_residual < cfg.control_tolerance
            && self.orbit_defect.is_some_and(|d| d <= cfg.orbit_epsilon)
    }
}

/// Simulates every initial state, then measures pairwise convergence on the
/// final `tail_fraction` of the horizon and the spectral content of the
/// post-transient orbits.
pub fn attraction_study(
    params: &EnzymeParams,
    initial_states: &[State4],
    horizon: f64,
    control: &StepControl,
    cfg: &DiagnosticsConfig,
) -> Result<(AttractionStudy, Vec<Trajectory>)> {
    let runs = simulate_batch(params, initial_states, 0.0, horizon, control)?;
    let tail_start = horizon * (1.0 - cfg.tail_fraction);
    let report = attraction_report(&runs, tail_start)?;
    let freqs: Vec<f64> = params
        .inflow_s
        .frequencies()
        .chain(params.inflow_i.frequencies())
        .collect();
    let estimates = runs
        .par_iter()
        .map(|r| extract_attractor(r, cfg.transient_fraction, &freqs))
        .collect::<Result<Vec<_>>>()?;
    let spectral_spread = estimates[1..]
        .iter()
        .map(|e| spectral_distance(&estimates[0], e))
        .fold(0.0, f64::max);
    let control_residual = estimates
        .iter()
        .map(|e| e.control_residual)
        .fold(0.0, f64::max);
    let sups = InflowSups::computed(params)?;
    let region = bracketing::attractor_bounds(params, sups);
    let region_excess = estimates
        .iter()
        .map(|e| e.region_excess(&region))
        .fold(0.0, f64::max);
    let forcing_period = common_almost_period(
        &[&params.inflow_s, &params.inflow_i],
        cfg.forcing_epsilon,
        cfg.tau_min,
        cfg.tau_max,
        cfg.tau_step,
    );
    let orbit_defect = match forcing_period {
        Some(p) => estimates
            .iter()
            .map(|e| {
                orbit_almost_period(&e.orbit, p.tau, cfg.orbit_epsilon).map(|c| c.max_deviation)
            })
            .collect::<Result<Vec<_>>>()
            .ok()
            .map(|v| v.into_iter().fold(0.0, f64::max)),
        None => None,
    };
    Ok((
        AttractionStudy {
            initial_states: initial_states.to_vec(),
            horizon,
            report,
            spectral_spread,
            control_residual,
            forcing_period,
            orbit_defect,
            region_excess,
        },
        runs,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueStudy {
    pub residuals: MeanValueResiduals,
    pub halving: HalvingCheck,
}

impl MeanValueStudy {
    pub fn passed(&self, cfg: &DiagnosticsConfig) -> bool {
        self.residuals.max_residual() < cfg.mean_tolerance
            && self.residuals.max_combined() < cfg.combined_tolerance
            && self.halving.halves
    }
}

/// Quadrature slack allowed on top of the telescoping bound.
pub const MEAN_QUADRATURE_SLACK: f64 = 1.0e-9;

/// Simulates from `x0` over `mean_transient + 2·mean_window` and evaluates
/// the windowed means of `V` after the transient.
pub fn meanvalue_study(
    params: &EnzymeParams,
    x0: State4,
    control: &StepControl,
    cfg: &DiagnosticsConfig,
) -> Result<MeanValueStudy> {
    let t0 = cfg.mean_transient;
    let w = cfg.mean_window;
    let run = crate::integrate::simulate(params, x0, 0.0, t0 + 2.0 * w, control)?;
    let residuals = meanvalue_residuals(&run, params, TimeWindow::new(t0, t0 + w)?)?;
    let halving = residual_halving(&run, params, t0, w, MEAN_QUADRATURE_SLACK)?;
    Ok(MeanValueStudy { residuals, halving })
}

/// Analytic oracles for the signal toolkit on `1 + cos t`, `1 + sin πt` and
/// a constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalOracle {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl SignalOracle {
    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

pub fn signal_oracles() -> Result<Vec<SignalOracle>> {
    let pi = std::f64::consts::PI;
    let fs = ApSignal::new(1.0, vec![Harmonic::new(1.0, 1.0, 0.0)])?;
    let fi = ApSignal::new(1.0, vec![Harmonic::new(pi, 0.0, 1.0)])?;
    let three = ApSignal::constant(3.0);
    let sin_pi = ApSignal::new(0.0, vec![Harmonic::new(pi, 0.0, 1.0)])?;
    let w2000 = TimeWindow::from_origin(2000.0)?;
    let w1e4 = TimeWindow::from_origin(crate::apsignal::DEFAULT_MEAN_WINDOW)?;
    let sample = |s: &ApSignal, w: TimeWindow| {
        s.sample(
            w,
            s.quadrature_step(crate::apsignal::DEFAULT_QUADRATURE_STEP),
        )
    };
    let fs_samples = sample(&fs, w2000);
    let sin_samples = sample(
        &ApSignal::new(0.0, vec![Harmonic::new(1.0, 0.0, 1.0)])?,
        TimeWindow::from_origin(200.0 * pi)?,
    );
    let oracle = |name: &str, value: f64, expected: f64, tolerance: f64| SignalOracle {
        name: name.into(),
        value,
        expected,
        tolerance,
    };
    let bs = fs.signal_bounds(crate::model::FORCING_GRID)?;
    let bi = fi.signal_bounds(crate::model::FORCING_GRID)?;
    let b3 = three.signal_bounds(crate::model::FORCING_GRID)?;
    Ok(vec![
        oracle(
            "mean 1+cos t, W=2000",
            mean_value_empirical(&fs_samples, w2000)?.value,
            1.0,
            1e-3,
        ),
        oracle(
            "mean 3, W=2000",
            mean_value_empirical(&sample(&three, w2000), w2000)?.value,
            3.0,
            1e-12,
        ),
        oracle(
            "mean sin t, W=200π",
            mean_value_empirical(&sin_samples, TimeWindow::from_origin(200.0 * pi)?)?.value,
            0.0,
            1e-6,
        ),
        oracle(
            "Re c[1+cos t, 1]",
            fourier_coefficient(&fs_samples, 1.0, w2000)?.re,
            0.5,
            1e-3,
        ),
        oracle(
            "Im c[1+cos t, 1]",
            fourier_coefficient(&fs_samples, 1.0, w2000)?.im,
            0.0,
            1e-3,
        ),
        oracle(
            "c[1+cos t, 0]",
            fourier_coefficient(&fs_samples, 0.0, w2000)?.re,
            1.0,
            1e-3,
        ),
        oracle(
            "|c[1+cos t, 2]|",
            fourier_coefficient(&fs_samples, 2.0, w2000)?.norm(),
            0.0,
            1e-3,
        ),
        oracle("Parseval 1+cos t", parseval_defect(&fs, w1e4)?, 0.0, 1e-3),
        oracle(
            "Parseval sin πt",
            parseval_defect(&sin_pi, w1e4)?,
            0.0,
            1e-3,
        ),
        oracle(
            "Parseval 0",
            parseval_defect(&ApSignal::constant(0.0), w2000)?,
            0.0,
            0.0,
        ),
        oracle("sup 1+cos t", bs.sup_value, 2.0, 1e-6),
        oracle("inf 1+cos t", bs.inf_value, 0.0, 1e-6),
        oracle("sup 1+sin πt", bi.sup_value, 2.0, 1e-6),
        oracle("inf 1+sin πt", bi.inf_value, 0.0, 1e-6),
        oracle("sup 3", b3.sup_value, 3.0, 0.0),
        oracle("inf 3", b3.inf_value, 3.0, 0.0),
        oracle(
            "1+cos t has period 2π (ε=1e-6)",
            almost_period_check(&fs_samples, 2.0 * pi, 1e-6)?.max_deviation,
            0.0,
            1e-6,
        ),
    ])
}

/// Everything `reproduce-paper` computes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperRun {
    pub checks: Vec<CheckLine>,
    pub monotonicity: MonotonicityStudy,
    pub conservation: ConservationStudy,
    pub order: OrderStudy,
    pub brackets: BracketStudy,
    pub iteration: IterationRun,
    pub attraction: AttractionStudy,
    pub mean_values: MeanValueStudy,
    pub signal_oracles: Vec<SignalOracle>,
    #[serde(skip)]
    pub runs: Vec<Trajectory>,
}

impl PaperRun {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the nine acceptance studies in order, reporting progress through
/// `progress` as each check completes.
pub fn reproduce_paper(
    config: &RunConfig,
    mut progress: impl FnMut(&CheckLine),
) -> Result<PaperRun> {
    let params = config.params()?;
    let control = config.step_control();
    let d = &config.diagnostics;
    let mut checks = Vec::new();
    let mut push = |c: CheckLine, checks: &mut Vec<CheckLine>| {
        progress(&c);
        checks.push(c);
    };

    let t = Instant::now();
    let monotonicity = monotonicity_study(&params, &config.state_box)?;
    push(
        line(
            "1",
            "monotonicity certificate",
            monotonicity.passed(),
            format!(
                "intraspecific={} min_margin={:.3e}; extended box witnesses={}",
                monotonicity.stoichiometric.is_intraspecific,
                monotonicity.stoichiometric.min_margin,
                monotonicity.extended.violation_count
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let half = 0.5 * params.total_enzyme;
    let conservation = conservation_study(
        &params,
        State4::new(1.0, 1.0, 0.5 * half, 0.5 * half),
        config.simulation.conservation_horizon,
        &control,
    )?;
    push(
        line(
            "2",
            "conservation",
            conservation.max_defect < 1e-6,
            format!(
                "max |c_E + c_ES + c_EI − T| = {:.3e}",
                conservation.max_defect
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let pairs = random_ordered_pairs(
        config.simulation.order_pairs,
        config.simulation.lhs_s_max,
        config.simulation.lhs_i_max,
        params.total_enzyme,
        config.seed,
    );
    let order = order_study(&params, &pairs, config.simulation.order_horizon, &control)?;
    push(
        line(
            "3",
            "order preservation",
            order.max_defect < 1e-6,
            format!(
                "max order defect {:.3e} over {} pairs",
                order.max_defect,
                pairs.len()
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let brackets = bracket_study(&params, &config.bracket)?;
    push(
        line(
            "4",
            "bracket validity",
            brackets.vertices_pass() && brackets.faces_pass(),
            format!(
                "sub margins {:?}, super margins {:?}, failing faces {:?}",
                brackets.computed.sub_check.worst_margin,
                brackets.computed.super_check.worst_margin,
                brackets.failed_faces()
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let iteration = iteration_study(
        &params,
        &config.iteration.to_config()?,
        config.iteration.shift,
    )?;
    let last_gap = iteration.steps.last().map_or(f64::NAN, |s| s.gap);
    push(
        line(
            "5",
            "monotone iteration",
            iteration.max_monotonicity_defect() < 1e-6
                && iteration.gap_nonincreasing(iteration.order_tolerance)
                && iteration.residual() < 1e-5,
            format!(
                "L={:.4} steps={} monotonicity defect {:.3e}, gap nonincreasing: {}, final gap {:.3e}, residual {:.3e}",
                iteration.shift,
                iteration.steps.len() - 1,
                iteration.max_monotonicity_defect(),
                iteration.gap_nonincreasing(iteration.order_tolerance),
                last_gap,
                iteration.residual()
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let initial = config
        .simulation
        .initial_conditions(params.total_enzyme, config.seed);
    let (attraction, runs) =
        attraction_study(&params, &initial, config.simulation.horizon, &control, d)?;
    push(
        line(
            "6",
            "global attraction",
            attraction.attraction_passed(d),
            format!(
                "{} runs, max tail gap {:.3e}, tail min component {:.4}",
                initial.len(),
                attraction.report.max_tail_gap,
                attraction.report.tail_min_component
            ),
            t,
        ),
        &mut checks,
    );
    push(
        line(
            "7",
            "almost periodicity",
            attraction.almost_periodicity_passed(d),
            format!(
                "spectral spread {:.3e}, control probe {:.3e}, τ={:?}, orbit defect {:?}",
                attraction.spectral_spread,
                attraction.control_residual,
                attraction.forcing_period.map(|p| p.tau),
                attraction.orbit_defect
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let mean_values = meanvalue_study(&params, initial[0], &control, d)?;
    push(
        line(
            "8",
            "mean-value identities",
            mean_values.passed(d),
            format!(
                "max |M[V]| {:.3e}, combined {:.3e}, halves on doubling: {}",
                mean_values.residuals.max_residual(),
                mean_values.residuals.max_combined(),
                mean_values.halving.halves
            ),
            t,
        ),
        &mut checks,
    );

    let t = Instant::now();
    let signal_oracles = signal_oracles()?;
    let failed: Vec<&str> = signal_oracles
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.name.as_str())
        .collect();
    push(
        line(
            "9",
            "signal toolkit oracles",
            failed.is_empty(),
            format!("{} oracles, failing: {failed:?}", signal_oracles.len()),
            t,
        ),
        &mut checks,
    );

    Ok(PaperRun {
        checks,
        monotonicity,
        conservation,
        order,
        brackets,
        iteration,
        attraction,
        mean_values,
        signal_oracles,
        runs,
    })
}
