//! Run configuration: a TOML document with one block per subcommand.
//!
//! Parsing rejects unknown keys and reports line/column; validation names
//! the offending field by its dotted path. The canonical form is the JSON
//! serialization of the validated config (fields in declaration order,
//! shortest round-trip floats) and its SHA-256 is the config hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::apsignal::{ApSignal, Harmonic, TimeWindow};
use crate::error::{Error, Result};
use crate::integrate::IterationConfig;
use crate::model::{EnzymeParams, State4};
use crate::monotonicity::SignConvention;
use crate::ode::StepControl;

/// The shipped configuration encoding the benchmark experiment.
pub const PAPER_CONFIG: &str = include_str!("../paper.cfg");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; excluded from the config hash.
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default, rename = "box")]
    pub state_box: BoxConfig,
    #[serde(default)]
    pub bracket: BracketConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub iteration: IterationBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub xi_s: f64,
    pub xi_i: f64,
    pub total_enzyme: f64,
    pub inflow_s: SignalSpec,
    pub inflow_i: SignalSpec,
}

/// `offset + Σ (cos·cos(frequency·t) + sin·sin(frequency·t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub offset: f64,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

/// One harmonic, written either as `[frequency, cos, sin]` or as a table
/// `{ frequency, cos, sin }` (missing coefficients are 0); both spellings
/// canonicalize to the same value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawTerm")]
pub struct TermSpec {
    pub frequency: f64,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTerm {
    Tuple(f64, f64, f64),
    Table(NamedTerm),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedTerm {
    frequency: f64,
    #[serde(default)]
    cos: f64,
    #[serde(default)]
    sin: f64,
}

impl From<RawTerm> for TermSpec {
    fn from(raw: RawTerm) -> Self {
        match raw {
            RawTerm::Tuple(frequency, cos, sin) => Self {
                frequency,
                cos,
                sin,
            },
            RawTerm::Table(NamedTerm {
                frequency,
                cos,
                sin,
            }) => Self {
                frequency,
                cos,
                sin,
            },
        }
    }
}

impl SignalSpec {
    pub fn to_signal(&self) -> Result<ApSignal> {
        ApSignal::new(
            self.offset,
            self.terms
                .iter()
                .map(|t| Harmonic::new(t.frequency, t.cos, t.sin))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub output_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let c = StepControl::default();
        Self {
            rtol: c.rtol,
            atol: c.atol,
            max_step: c.max_step,
            output_step: c.output_step,
        }
    }
}

/// `check-monotone`: the box `[0, s_max] × [0, i_max] × [0, cap·T]²` with
/// `c_ES + c_EI ≤ cap·T`, checked at `enzyme_cap` and again at
/// `extended_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxConfig {
    pub s_max: f64,
    pub i_max: f64,
    pub enzyme_cap: f64,
    pub extended_cap: f64,
    pub samples: usize,
    pub convention: SignConvention,
}

impl Default for BoxConfig {
    fn default() -> Self {
        Self {
            s_max: 3.0,
            i_max: 3.0,
            enzyme_cap: 1.0,
            extended_cap: 2.0,
            samples: crate::monotonicity::DEFAULT_SAMPLE_COUNT,
            convention: SignConvention::default(),
        }
    }
}

/// `brackets`: residual grid, face sampling, and optionally the inflow
/// suprema as stated elsewhere, reported next to the computed ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BracketConfig {
    pub horizon: f64,
    pub time_step: f64,
    pub face_horizon: f64,
    pub face_time_step: f64,
    pub face_samples: usize,
    pub stated_sup_s: Option<f64>,
    pub stated_sup_i: Option<f64>,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            time_step: 0.01,
            face_horizon: 20.0,
            face_time_step: 0.05,
            face_samples: 9,
            stated_sup_s: None,
            stated_sup_i: None,
        }
    }
}

/// `simulate`: explicit initial states plus a Latin-hypercube sample of
/// `[0, lhs_s_max] × [0, lhs_i_max] × [0, T/2]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub initial_states: Vec<[f64; 4]>,
    pub latin_hypercube: usize,
    pub lhs_s_max: f64,
    pub lhs_i_max: f64,
    pub track_product: bool,
    pub conservation_horizon: f64,
    pub order_pairs: usize,
    pub order_horizon: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: 2000.0,
            initial_states: Vec::new(),
            latin_hypercube: 10,
            lhs_s_max: 3.0,
            lhs_i_max: 3.0,
            track_product: false,
            conservation_horizon: 1000.0,
            order_pairs: 50,
            order_horizon: 200.0,
        }
    }
}

impl SimulationConfig {
    /// Explicit states first, then the seeded Latin-hypercube sample.
    pub fn initial_conditions(&self, total_enzyme: f64, seed: u64) -> Vec<State4> {
        let mut out: Vec<State4> = self
            .initial_states
            .iter()
            .map(|a| State4::from_array(*a))
            .collect();
        let half = 0.5 * total_enzyme;
        out.extend(crate::diagnostics::latin_hypercube(
            self.latin_hypercube,
            State4::default(),
            State4::new(self.lhs_s_max, self.lhs_i_max, half, half),
            seed,
        ));
        out
    }
}

/// `iterate`: see [`IterationConfig`]. Without `shift`, `L` comes from
/// `choose_shift` over the region `U` intersected with `c_ES + c_EI ≤ T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationBlock {
    pub window_start: f64,
    pub window_end: f64,
    pub step: f64,
    pub n_max: usize,
    pub stop_tol: f64,
    pub strict_order: bool,
    pub snapshot_stride: usize,
    pub shift: Option<f64>,
}

impl Default for IterationBlock {
    fn default() -> Self {
        let d = IterationConfig::default();
        Self {
            window_start: d.window.start,
            window_end: d.window.end,
            step: d.step,
            n_max: d.n_max,
            stop_tol: d.stop_tol,
            strict_order: d.strict_order,
            snapshot_stride: d.snapshot_stride,
            shift: None,
        }
    }
}

impl IterationBlock {
    pub fn to_config(&self) -> Result<IterationConfig> {
        let c = IterationConfig {
            window: TimeWindow::new(self.window_start, self.window_end)?,
            step: self.step,
            n_max: self.n_max,
            stop_tol: self.stop_tol,
            strict_order: self.strict_order,
            snapshot_stride: self.snapshot_stride,
        };
        c.validate()?;
        Ok(c)
    }
}

/// `diagnose` and the acceptance thresholds of `reproduce-paper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub transient_fraction: f64,
    /// Final fraction of the horizon on which pairwise gaps are measured.
    pub tail_fraction: f64,
    pub gap_threshold: f64,
    pub spectral_tolerance: f64,
    pub control_tolerance: f64,
    pub forcing_epsilon: f64,
    pub orbit_epsilon: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    /// Mean-value window `W`; the run covers `mean_transient + 2W`.
    pub mean_window: f64,
    pub mean_transient: f64,
    pub mean_tolerance: f64,
    pub combined_tolerance: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            transient_fraction: crate::diagnostics::DEFAULT_TRANSIENT_FRACTION,
            tail_fraction: 0.1,
            gap_threshold: crate::diagnostics::CONVERGENCE_THRESHOLD,
            spectral_tolerance: 1.0e-3,
            control_tolerance: 1.0e-2,
            forcing_epsilon: 1.0e-2,
            orbit_epsilon: 5.0e-2,
            tau_min: 1.0,
            tau_max: 1000.0,
            tau_step: 5.0e-4,
            mean_window: 1.0e4,
            mean_transient: 1000.0,
            mean_tolerance: 1.0e-3,
            combined_tolerance: 2.0e-3,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ConfigValidation {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(path, format!("{v} must be finite and > 0")))
    }
}

fn fraction(path: &str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(path, format!("{v} must lie in [0, 1)")))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map_or((0, 0), |span| line_column(text, span.start));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// The benchmark configuration shipped as `paper.cfg`.
    pub fn paper() -> Self {
        parse_config(PAPER_CONFIG).expect("shipped config is valid")
    }

    pub fn params(&self) -> Result<EnzymeParams> {
        let m = &self.model;
        let signal = |name: &str, spec: &SignalSpec| {
            spec.to_signal().map_err(|e| match e {
                Error::InvalidSignal(msg) => invalid(format!("model.{name}"), msg),
                other => other,
            })
        };
        let p = EnzymeParams {
            k1: m.k1,
            k2: m.k2,
            k3: m.k3,
            k4: m.k4,
            k5: m.k5,
            xi_s: m.xi_s,
            xi_i: m.xi_i,
            total_enzyme: m.total_enzyme,
            inflow_s: signal("inflow_s", &m.inflow_s)?,
            inflow_i: signal("inflow_i", &m.inflow_i)?,
        };
        p.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => invalid(format!("model.{field}"), reason),
            other => other,
        })?;
        Ok(p)
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.tolerances.rtol,
            atol: self.tolerances.atol,
            max_step: self.tolerances.max_step,
            output_step: self.tolerances.output_step,
            ..StepControl::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let t = &self.tolerances;
        positive("tolerances.rtol", t.rtol)?;
        positive("tolerances.atol", t.atol)?;
        positive("tolerances.max_step", t.max_step)?;
        positive("tolerances.output_step", t.output_step)?;

        let b = &self.state_box;
        positive("box.s_max", b.s_max)?;
        positive("box.i_max", b.i_max)?;
        positive("box.enzyme_cap", b.enzyme_cap)?;
        positive("box.extended_cap", b.extended_cap)?;
        if b.samples == 0 {
            return Err(invalid("box.samples", "must be at least 1"));
        }

        let br = &self.bracket;
        positive("bracket.horizon", br.horizon)?;
        positive("bracket.time_step", br.time_step)?;
        positive("bracket.face_horizon", br.face_horizon)?;
        positive("bracket.face_time_step", br.face_time_step)?;
        if br.face_samples < 2 {
            return Err(invalid("bracket.face_samples", "must be at least 2"));
        }
        for (path, v) in [
            ("bracket.stated_sup_s", br.stated_sup_s),
            ("bracket.stated_sup_i", br.stated_sup_i),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(path, format!("{v} must be finite and ≥ 0")));
                }
            }
        }

        let s = &self.simulation;
        positive("simulation.horizon", s.horizon)?;
        positive("simulation.lhs_s_max", s.lhs_s_max)?;
        positive("simulation.lhs_i_max", s.lhs_i_max)?;
        positive("simulation.conservation_horizon", s.conservation_horizon)?;
        positive("simulation.order_horizon", s.order_horizon)?;
        for (k, x) in s.initial_states.iter().enumerate() {
            if let Some(c) = x.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(invalid(
                    format!("simulation.initial_states[{k}][{c}]"),
                    format!("{} must be finite and ≥ 0", x[c]),
                ));
            }
            if x[2] + x[3] > self.model.total_enzyme {
                return Err(invalid(
                    format!("simulation.initial_states[{k}]"),
                    "c_ES + c_EI exceeds total_enzyme",
                ));
            }
        }

        let it = &self.iteration;
        if !(it.window_end > it.window_start) {
            return Err(invalid(
                "iteration.window_end",
                "must exceed iteration.window_start",
            ));
        }
        positive("iteration.step", it.step)?;
        positive("iteration.stop_tol", it.stop_tol)?;
        if it.n_max == 0 {
            return Err(invalid("iteration.n_max", "must be at least 1"));
        }
        if let Some(l) = it.shift {
            positive("iteration.shift", l)?;
        }

        let d = &self.diagnostics;
        fraction("diagnostics.transient_fraction", d.transient_fraction)?;
        fraction("diagnostics.tail_fraction", d.tail_fraction)?;
        for (path, v) in [
            ("diagnostics.gap_threshold", d.gap_threshold),
            ("diagnostics.spectral_tolerance", d.spectral_tolerance),
            ("diagnostics.control_tolerance", d.control_tolerance),
            ("diagnostics.forcing_epsilon", d.forcing_epsilon),
            ("diagnostics.orbit_epsilon", d.orbit_epsilon),
            ("diagnostics.tau_min", d.tau_min),
            ("diagnostics.tau_step", d.tau_step),
            ("diagnostics.mean_window", d.mean_window),
            ("diagnostics.mean_tolerance", d.mean_tolerance),
            ("diagnostics.combined_tolerance", d.combined_tolerance),
        ] {
            positive(path, v)?;
        }
        if !(d.tau_max > d.tau_min) {
            return Err(invalid(
                "diagnostics.tau_max",
                "must exceed diagnostics.tau_min",
            ));
        }
        if !(d.mean_transient.is_finite() && d.mean_transient >= 0.0) {
            return Err(invalid(
                "diagnostics.mean_transient",
                "must be finite and ≥ 0",
            ));
        }
        Ok(())
    }

    /// Canonical JSON with `out_dir` cleared.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out_dir = String::new();
        serde_json::to_string(&c).expect("config serializes")
    }

    /// Hex SHA-256 of [`RunConfig::canonical_json`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_is_the_benchmark() {
        let c = RunConfig::paper();
        assert_eq!(c.params().unwrap(), EnzymeParams::benchmark());
        assert_eq!(c.hash(), RunConfig::paper().hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_ignores_layout_and_output_directory() {
        let a = RunConfig::paper();
        let mut b = parse_config(&PAPER_CONFIG.replace("\n\n", "\n\n# spacing\n\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn term_spellings_hash_identically() {
        let named = PAPER_CONFIG.replace(
            "terms = [[1.0, 1.0, 0.0]]",
            "terms = [{ frequency = 1.0, cos = 1.0 }]",
        );
        assert_ne!(named, PAPER_CONFIG);
        assert_eq!(
            parse_config(&named).unwrap().hash(),
            RunConfig::paper().hash()
        );
    }

    #[test]
    fn negative_rate_names_the_field() {
        let text = PAPER_CONFIG.replace("k1 = 0.95", "k1 = -1.0");
        match parse_config(&text) {
            Err(Error::ConfigValidation { path, .. }) => assert_eq!(path, "model.k1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_frequency_is_a_validation_error() {
        let text = PAPER_CONFIG.replace(
            "terms = [[1.0, 1.0, 0.0]]",
            "terms = [[1.0, 1.0, 0.0], { frequency = 1.0, sin = 0.5 }]",
        );
        assert_ne!(text, PAPER_CONFIG);
        match parse_config(&text) {
            Err(Error::ConfigValidation { path, .. }) => assert_eq!(path, "model.inflow_s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = format!("{PAPER_CONFIG}\n[iteration]\nbogus = 1\n");
        assert!(matches!(
            parse_config(&text),
            Err(Error::ConfigParse { .. })
        ));
        let text = PAPER_CONFIG.replacen("[tolerances]", "[tolerances]\nrtoll = 1e-3", 1);
        match parse_config(&text) {
            Err(Error::ConfigParse { line, column, .. }) => {
                let expect = PAPER_CONFIG
                    .lines()
                    .position(|l| l == "[tolerances]")
                    .unwrap()
                    + 2;
                assert_eq!((line, column), (expect, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_fill_missing_blocks() {
        let text = "[model]\nk1 = 1\nk2 = 1\nk3 = 1\nk4 = 1\nk5 = 1\nxi_s = 1\nxi_i = 1\ntotal_enzyme = 1\n\
                    inflow_s = { offset = 1 }\ninflow_i = { offset = 2 }\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.iteration, IterationBlock::default());
        assert_eq!(c.seed, 1);
        assert!(c.params().unwrap().inflow_i.is_constant());
    }
}
