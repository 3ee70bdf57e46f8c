//! `apzyme`: command-line front end for the enzyme/inhibitor model.
//!
//! Every subcommand reads one TOML config (the shipped benchmark when
//! `--config` is absent), writes its artifacts plus `manifest.json` into the
//! output directory, prints a human-readable report unless `--quiet`, and
//! exits with 0 (success), 1 (invalid input), 2 (numerical failure) or
//! 3 (`reproduce-paper` acceptance failure).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use apzyme::apsignal::TimeWindow;
use apzyme::artifacts::{read_trajectory, write_table, write_trajectory, Manifest, TABLE_FORMAT};
use apzyme::config::{parse_config, RunConfig, PAPER_CONFIG};
use apzyme::diagnostics::{
    attraction_report, convergence_metric, extract_attractor, meanvalue_residuals, simulate_batch,
    simulate_batch_with_product, AttractorEstimate,
};
use apzyme::integrate::{IterationRun, Trajectory};
use apzyme::model::SPECIES;
use apzyme::reproduce::{self, BracketStudy, MonotonicityStudy, PaperRun};
use apzyme::Error;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

/// Environment variable overriding the output directory (below `--out`).
const OUT_DIR_ENV: &str = "APZYME_OUT_DIR";

/// Sample stride for the plot-ready curves written by `reproduce-paper`:
/// every 10th point of the 0.01 output grid is ample for plotting and keeps
/// each file near 20 000 rows.
const PLOT_STRIDE: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "apzyme",
    version,
    about = "Enzyme catalysis with a competitive inhibitor under almost-periodic inflows"
)]
struct Cli {
    /// TOML run configuration (defaults to the shipped benchmark).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and APZYME_OUT_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random initial conditions and ordered pairs.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Relative tolerance of the integrator.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance of the integrator.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Simulation horizon; also the length of the iteration window.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Suppress the human-readable report.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Certify the Jacobian sign pattern on the stoichiometric box.
    CheckMonotone,
    /// Build the constant sub/super-solution bracket and check region U.
    Brackets,
    /// Integrate the reduced system from the configured initial states.
    Simulate,
    /// Run the monotone iteration from the vertex bracket.
    Iterate,
    /// Analyse trajectory CSVs written by `simulate`.
    Diagnose {
        /// Trajectory CSV files; the first is the reference for gap curves.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the full benchmark and every acceptance check.
    ReproducePaper,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckMonotone => "check-monotone",
            Command::Brackets => "brackets",
            Command::Simulate => "simulate",
            Command::Iterate => "iterate",
            Command::Diagnose { .. } => "diagnose",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

/// What a subcommand hands back to `main`.
struct Outcome {
    report: Value,
    text: String,
    parameters: serde_json::Map<String, Value>,
    artifacts: Vec<String>,
    acceptance_failed: bool,
}

impl Outcome {
    fn new(report: Value, text: String) -> Self {
        Outcome {
            report,
            text,
            parameters: Default::default(),
            artifacts: Vec::new(),
            acceptance_failed: false,
        }
    }
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?,
        None => PAPER_CONFIG.to_string(),
    };
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(rtol) = cli.rtol {
        config.tolerances.rtol = rtol;
    }
    if let Some(atol) = cli.atol {
        config.tolerances.atol = atol;
    }
    if let Some(h) = cli.horizon {
        config.simulation.horizon = h;
        config.iteration.window_end = config.iteration.window_start + h;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    } else if let Ok(out) = std::env::var(OUT_DIR_ENV) {
        config.out_dir = out;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let subcommand = cli.command.name();
    let started = Instant::now();
    match run(&cli, started) {
        Ok(failed) => ExitCode::from(if failed { 3 } else { 0 }),
        Err(f) => {
            let (code, kind, message) = match f {
                Failure::Validation(m) => (1, "validation", m),
                Failure::Numerical(m) => (2, "numerical", m),
            };
            let err =
                json!({ "error": { "subcommand": subcommand, "kind": kind, "message": message } });
            eprintln!("{err}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli, started: Instant) -> Result<bool, Failure> {
    let config = load_config(cli)?;
    let out_dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out_dir).map_err(Error::from)?;
    let outcome = match &cli.command {
        Command::CheckMonotone => check_monotone(&config)?,
        Command::Brackets => brackets(&config, &out_dir)?,
        Command::Simulate => simulate(&config, &out_dir)?,
        Command::Iterate => iterate(&config, &out_dir)?,
        Command::Diagnose { inputs } => diagnose(&config, &out_dir, inputs)?,
        Command::ReproducePaper => reproduce_paper(&config, &out_dir, cli.quiet)?,
    };

    let report_name = "report.json";
    let mut text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    text.push('\n');
    fs::write(out_dir.join(report_name), text).map_err(Error::from)?;

    let mut manifest = Manifest {
        tool: "apzyme".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cli.command.name().into(),
        config_hash: config.hash(),
        seed: config.seed,
        rtol: config.tolerances.rtol,
        atol: config.tolerances.atol,
        parameters: outcome.parameters,
        wall_time_seconds: 0.0,
        artifacts: Vec::new(),
    };
    for rel in outcome
        .artifacts
        .iter()
        .map(String::as_str)
        .chain([report_name])
    {
        manifest.record(&out_dir, rel)?;
    }
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir)?;

    if !cli.quiet {
        print!("{}", outcome.text);
        println!("artifacts: {}", out_dir.display());
    }
    Ok(outcome.acceptance_failed)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn monotonicity_text(s: &MonotonicityStudy) -> String {
    let mut t = String::new();
    let st = &s.stoichiometric;
    t += &format!(
        "stoichiometric box: intraspecific = {}, min margin = {:.6e} at entry {:?}, {} samples\n",
        st.is_intraspecific, st.min_margin, st.min_margin_entry, st.samples_checked
    );
    let ex = &s.extended;
    t += &format!(
        "extended box:       intraspecific = {}, {} violating samples\n",
        ex.is_intraspecific, ex.violation_count
    );
    if let Some(v) = ex.violations.first() {
        t += &format!(
            "  witness: entry {:?} = {:.6} at state {}\n",
            v.entry,
            v.value,
            fmt_vec(&v.state)
        );
    }
    t += &format!(
        "Kamke (off-diagonal) convention: monotone = {}, {} violating samples\n",
        s.kamke.is_monotone, s.kamke.violation_count
    );
    t
}

fn check_monotone(config: &RunConfig) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let study = reproduce::monotonicity_study(&params, &config.state_box)?;
    let text = monotonicity_text(&study);
    let report = serde_json::to_value(&study).expect("report serializes");
    let mut outcome = Outcome::new(report, text);
    outcome
        .parameters
        .insert("box".into(), json!(config.state_box));
    Ok(outcome)
}

fn bracket_text(b: &BracketStudy) -> String {
    let c = &b.computed;
    let mut t = format!(
        "inflow sups: F_S {:.6}, F_I {:.6}\nomega0 = {:.6?}, Z* = {:.6?}\nU: omega*_S = {:.6}, omega*_I = {:.6}, cap {:.6}\n",
        c.sups.sup_s, c.sups.sup_i, c.omega0, c.z_star, c.region.omega_star_s, c.region.omega_star_i, c.region.z_cap
    );
    t += &format!(
        "subsolution {} margins {:?}\nsupersolution {} margins {:?}\n",
        if c.sub_check.passed { "ok" } else { "FAILS" },
        c.sub_check.worst_margin,
        if c.super_check.passed { "ok" } else { "FAILS" },
        c.super_check.worst_margin
    );
    for f in &c.faces.faces {
        t += &format!(
            "  face {:?} (component {}): {} slack {:+.6e}, extreme derivative {:+.6e}\n",
            f.face,
            SPECIES[f.component],
            if f.passed { "ok   " } else { "FAILS" },
            f.worst_slack,
            f.extreme_derivative
        );
    }
    if let Some(s) = &b.stated {
        t += &format!(
            "at stated sups ({}, {}): omega0 = {:.6?}, Z* = {:.6?}, faces pass = {}\n",
            s.sups.sup_s,
            s.sups.sup_i,
            s.omega0,
            s.z_star,
            s.faces.all_passed()
        );
    }
    t
}

fn brackets(config: &RunConfig, out_dir: &Path) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let study = reproduce::bracket_study(&params, &config.bracket)?;
    let faces = "faces.csv";
    let rows = study.computed.faces.faces.iter().enumerate().map(|(k, f)| {
        let w = f.witness.to_array();
        vec![
            (k + 1) as f64,
            f.component as f64,
            f.worst_slack,
            f.extreme_derivative,
            f.analytic_bound.unwrap_or(f64::NAN),
            f.witness_time,
            w[0],
            w[1],
            w[2],
            w[3],
            f64::from(u8::from(f.passed)),
        ]
    });
    write_table(
        &out_dir.join(faces),
        TABLE_FORMAT,
        Some("inward-pointing checks on the faces of U; face k is C_k, component indexes c_S, c_I, c_ES, c_EI"),
        &[
            "face", "component", "worst_slack", "extreme_derivative", "analytic_bound",
            "witness_t", "witness_c_S", "witness_c_I", "witness_c_ES", "witness_c_EI", "passed",
        ],
        rows,
    )?;
    let vertices = "vertices.csv";
    let pair = &study.computed.pair;
    write_table(
        &out_dir.join(vertices),
        TABLE_FORMAT,
        Some("constant subsolution (row 1) and supersolution (row 2)"),
        &["c_S", "c_I", "c_ES", "c_EI"],
        [pair.sub.to_array(), pair.sup.to_array()],
    )?;
    let text = bracket_text(&study);
    let mut outcome = Outcome::new(
        serde_json::to_value(&study).expect("report serializes"),
        text,
    );
    outcome.artifacts = vec![faces.into(), vertices.into()];
    Ok(outcome)
}

fn trajectory_name(k: usize) -> String {
    format!("trajectory_{k:02}.csv")
}

fn simulate(config: &RunConfig, out_dir: &Path) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let control = config.step_control();
    let initial = config
        .simulation
        .initial_conditions(params.total_enzyme, config.seed);
    let horizon = config.simulation.horizon;
    let runs = if config.simulation.track_product {
        simulate_batch_with_product(&params, &initial, 0.0, horizon, &control)?
    } else {
        simulate_batch(&params, &initial, 0.0, horizon, &control)?
    };
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    let mut text = String::new();
    for (k, (run, x0)) in runs.iter().zip(&initial).enumerate() {
        let name = trajectory_name(k);
        write_trajectory(
            &out_dir.join(&name),
            run,
            Some(&format!("initial state {}", fmt_vec(&x0.to_array()))),
        )?;
        let end = run.final_state().to_array();
        text += &format!(
            "run {k:2}: {} -> {} ({} accepted steps)\n",
            fmt_vec(&x0.to_array()),
            fmt_vec(&end),
            run.stats.accepted
        );
        summary.push(json!({
            "file": name,
            "initial_state": x0,
            "final_state": end,
            "min_component": run.min_component(),
            "stats": run.stats,
        }));
        artifacts.push(name);
    }
    let mut outcome = Outcome::new(json!({ "horizon": horizon, "runs": summary }), text);
    outcome.parameters.insert("horizon".into(), json!(horizon));
    outcome
        .parameters
        .insert("initial_states".into(), json!(initial));
    outcome.artifacts = artifacts;
    Ok(outcome)
}

fn iteration_summary(run: &IterationRun) -> Value {
    json!({
        "shift": run.shift,
        "warmup": run.warmup,
        "config": run.config,
        "steps": run.steps.len().saturating_sub(1),
        "converged": run.converged,
        "max_monotonicity_defect": run.max_monotonicity_defect(),
        "gap_nonincreasing": run.gap_nonincreasing(run.order_tolerance),
        "final_gap": run.steps.last().map(|s| s.gap),
        "lower_residual": run.lower_residual,
        "upper_residual": run.upper_residual,
        "order_tolerance": run.order_tolerance,
    })
}

fn write_iteration(run: &IterationRun, out_dir: &Path) -> Result<Vec<String>, Error> {
    let steps = "iteration_steps.csv";
    write_table(
        &out_dir.join(steps),
        TABLE_FORMAT,
        Some(&format!("monotone iteration with shift L = {}", run.shift)),
        &[
            "n",
            "lower_defect",
            "upper_defect",
            "crossing_defect",
            "gap",
            "lower_change",
            "upper_change",
        ],
        run.steps.iter().map(|s| {
            [
                s.n as f64,
                s.lower_defect,
                s.upper_defect,
                s.crossing_defect,
                s.gap,
                s.lower_change,
                s.upper_change,
            ]
        }),
    )?;
    let mut names = vec![steps.to_string()];
    for (name, traj) in [
        ("iterate_lower.csv", &run.lower),
        ("iterate_upper.csv", &run.upper),
    ] {
        write_trajectory(
            &out_dir.join(name),
            traj,
            Some("final iterate on the window grid"),
        )?;
        names.push(name.into());
    }
    for s in &run.steps {
        if let Some(snap) = &s.snapshot {
            let name = format!("snapshot_{:03}.csv", s.n);
            let mut cols = vec!["t".to_string()];
            cols.extend(SPECIES.iter().map(|c| format!("lower_{c}")));
            cols.extend(SPECIES.iter().map(|c| format!("upper_{c}")));
            let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
            let rows = snap
                .times
                .iter()
                .zip(snap.lower.iter().zip(&snap.upper))
                .map(|(t, (l, u))| {
                    let (l, u) = (l.to_array(), u.to_array());
                    vec![*t, l[0], l[1], l[2], l[3], u[0], u[1], u[2], u[3]]
                });
            write_table(
                &out_dir.join(&name),
                TABLE_FORMAT,
                Some(&format!("iterate pair after step {}", s.n)),
                &cols,
                rows,
            )?;
            names.push(name);
        }
    }
    Ok(names)
}

fn iteration_text(run: &IterationRun) -> String {
    let last = run.steps.last();
    format!(
        "L = {:.6}, warm-up {:.1}, window [{}, {}], {} steps, converged = {}\nmax monotonicity defect {:.3e}, final gap {:.3e}, residual lower {:.3e} upper {:.3e}\n",
        run.shift,
        run.warmup,
        run.config.window.start,
        run.config.window.end,
        run.steps.len().saturating_sub(1),
        run.converged,
        run.max_monotonicity_defect(),
        last.map_or(f64::NAN, |s| s.gap),
        run.lower_residual,
        run.upper_residual
    )
}

fn iterate(config: &RunConfig, out_dir: &Path) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let run = reproduce::iteration_study(
        &params,
        &config.iteration.to_config()?,
        config.iteration.shift,
    )?;
    let artifacts = write_iteration(&run, out_dir)?;
    let mut outcome = Outcome::new(iteration_summary(&run), iteration_text(&run));
    outcome.parameters.insert("shift".into(), json!(run.shift));
    outcome
        .parameters
        .insert("warmup".into(), json!(run.warmup));
    outcome.parameters.insert(
        "window".into(),
        json!([run.config.window.start, run.config.window.end]),
    );
    outcome.artifacts = artifacts;
    Ok(outcome)
}

fn spectra_rows(estimates: &[AttractorEstimate]) -> Vec<[f64; 6]> {
    let mut rows = Vec::new();
    for (k, e) in estimates.iter().enumerate() {
        for line in e.lines.iter().chain([&e.control]) {
            for (c, z) in line.coefficients.iter().enumerate() {
                rows.push([k as f64, line.frequency, c as f64, z.re, z.im, z.norm()]);
            }
        }
    }
    rows
}

fn write_spectra(estimates: &[AttractorEstimate], path: &Path) -> Result<(), Error> {
    write_table(
        path,
        TABLE_FORMAT,
        Some("Fourier coefficients of each post-transient orbit; component indexes c_S, c_I, c_ES, c_EI; the last frequency of each run is the control probe"),
        &["run", "frequency", "component", "re", "im", "abs"],
        spectra_rows(estimates),
    )
}

fn write_gap_curve(
    reference: &Trajectory,
    other: &Trajectory,
    path: &Path,
    stride: usize,
) -> Result<(), Error> {
    let curve = convergence_metric(reference, other)?;
    write_table(
        path,
        TABLE_FORMAT,
        Some("sup-norm distance to the reference run"),
        &["t", "gap"],
        curve
            .times
            .iter()
            .zip(&curve.gaps)
            .step_by(stride)
            .map(|(t, g)| [*t, *g]),
    )
}

fn write_phase(traj: &Trajectory, from: f64, path: &Path, stride: usize) -> Result<(), Error> {
    write_table(
        path,
        TABLE_FORMAT,
        Some("(c_S, c_I) projection of the orbit"),
        &["t", "c_S", "c_I"],
        traj.times
            .iter()
            .zip(&traj.states)
            .filter(|(t, _)| **t >= from)
            .step_by(stride)
            .map(|(t, s)| [*t, s.c_s, s.c_i]),
    )
}

fn diagnose(config: &RunConfig, out_dir: &Path, inputs: &[PathBuf]) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let d = &config.diagnostics;
    let runs = inputs
        .iter()
        .map(|p| read_trajectory(p))
        .collect::<Result<Vec<_>, _>>()?;
    let freqs: Vec<f64> = params
        .inflow_s
        .frequencies()
        .chain(params.inflow_i.frequencies())
        .collect();
    let estimates = runs
        .iter()
        .map(|r| extract_attractor(r, d.transient_fraction, &freqs))
        .collect::<Result<Vec<_>, _>>()?;

    let mut artifacts = vec!["spectra.csv".to_string()];
    write_spectra(&estimates, &out_dir.join(&artifacts[0]))?;
    let orbit = "orbit.csv";
    write_phase(
        &runs[0],
        estimates[0].transient_cut,
        &out_dir.join(orbit),
        1,
    )?;
    artifacts.push(orbit.into());
    for k in 1..runs.len() {
        let name = format!("gap_{k:02}.csv");
        write_gap_curve(&runs[0], &runs[k], &out_dir.join(&name), 1)?;
        artifacts.push(name);
    }

    let mut text = String::new();
    let attraction = if runs.len() > 1 {
        let end = runs
            .iter()
            .map(Trajectory::end)
            .fold(f64::INFINITY, f64::min);
        let start = runs
            .iter()
            .map(Trajectory::start)
            .fold(f64::NEG_INFINITY, f64::max);
        let tail = end - d.tail_fraction * (end - start);
        let r = attraction_report(&runs, tail)?;
        text += &format!(
            "max pairwise gap on [{tail}, {end}]: {:.3e} (pair {:?}), tail min component {:.6}\n",
            r.max_tail_gap, r.worst_pair, r.tail_min_component
        );
        Some(r)
    } else {
        None
    };

    let orbit0 = &estimates[0].orbit;
    let window = TimeWindow::new(orbit0.start(), orbit0.end())?;
    let means = meanvalue_residuals(orbit0, &params, window)?;
    text += &format!(
        "mean-value residuals on [{:.1}, {:.1}]: {:?}; combined S {:.3e}, I {:.3e}\n",
        window.start, window.end, means.r, means.combined_s, means.combined_i
    );
    for (k, e) in estimates.iter().enumerate() {
        text += &format!(
            "run {k}: control probe {:.3e}, positivity margin {:.6}\n",
            e.control_residual, e.positivity_margin
        );
    }
    let report = json!({
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "attraction": attraction,
        "mean_values": means,
        "runs": estimates.iter().map(|e| json!({
            "transient_cut": e.transient_cut,
            "control_residual": e.control_residual,
            "positivity_margin": e.positivity_margin,
            "lines": e.lines,
        })).collect::<Vec<_>>(),
    });
    let mut outcome = Outcome::new(report, text);
    outcome.artifacts = artifacts;
    Ok(outcome)
}

fn paper_report(run: &PaperRun) -> Value {
    json!({
        "all_passed": run.all_passed(),
        "checks": run.checks,
        "monotonicity": run.monotonicity,
        "conservation": run.conservation,
        "order": {
            "max_defect": run.order.max_defect,
            "worst_pair": run.order.worst_pair,
            "worst": run.order.reports.get(run.order.worst_pair),
        },
        "brackets": run.brackets,
        "iteration": iteration_summary(&run.iteration),
        "attraction": run.attraction,
        "mean_values": run.mean_values,
        "signal_oracles": run.signal_oracles,
    })
}

fn reproduce_paper(config: &RunConfig, out_dir: &Path, quiet: bool) -> Result<Outcome, Failure> {
    let run = reproduce::reproduce_paper(config, |line| {
        if !quiet {
            println!("{line}");
        }
    })?;
    let d = &config.diagnostics;
    let mut artifacts = write_iteration(&run.iteration, out_dir)?;

    let freqs: Vec<f64> = config
        .params()?
        .inflow_s
        .frequencies()
        .chain(config.params()?.inflow_i.frequencies())
        .collect();
    let estimates = run
        .runs
        .iter()
        .map(|r| extract_attractor(r, d.transient_fraction, &freqs))
        .collect::<Result<Vec<_>, _>>()?;
    write_spectra(&estimates, &out_dir.join("spectra.csv"))?;
    artifacts.push("spectra.csv".into());
    for (k, r) in run.runs.iter().enumerate() {
        let phase = format!("phase_{k:02}.csv");
        write_phase(r, r.start(), &out_dir.join(&phase), PLOT_STRIDE)?;
        artifacts.push(phase);
        if k > 0 {
            let gap = format!("gap_{k:02}.csv");
            write_gap_curve(&run.runs[0], r, &out_dir.join(&gap), PLOT_STRIDE)?;
            artifacts.push(gap);
        }
    }
    let orbit = "orbit.csv";
    write_phase(
        &run.runs[0],
        estimates[0].transient_cut,
        &out_dir.join(orbit),
        1,
    )?;
    artifacts.push(orbit.into());

    let summary = "acceptance.txt";
    let lines: String = run
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {} {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.name,
                c.detail
            )
        })
        .collect();
    fs::write(out_dir.join(summary), &lines).map_err(Error::from)?;
    artifacts.push(summary.into());

    let passed = run.checks.iter().filter(|c| c.passed).count();
    let text = format!("{passed}/{} acceptance checks passed\n", run.checks.len());
    let mut outcome = Outcome::new(paper_report(&run), text);
    outcome
        .parameters
        .insert("shift".into(), json!(run.iteration.shift));
    outcome
        .parameters
        .insert("horizon".into(), json!(config.simulation.horizon));
    outcome.parameters.insert(
        "initial_states".into(),
        json!(run.attraction.initial_states),
    );
    outcome.artifacts = artifacts;
    outcome.acceptance_failed = !run.all_passed();
    Ok(outcome)
}
