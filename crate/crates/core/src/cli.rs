//! `powertrain-opt ingest|synth|size|simulate|report`.
//!
//! Exit codes: 0 ok, 2 input error, 3 infeasible, 4 solver limit,
//! 5 verification failed. Every command writes a `manifest.json` (or the
//! path given by `--manifest`) recording input and output digests and the
//! resolved configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{IoError, ScenarioError};
use crate::io::{self, RunManifest};
use crate::model::{build_milp, ConstraintGroup, RampMode, ScenarioSpec};
use crate::profile::{
    average_profiles, default_efficiencies, fuel_flow_to_power, go_around_suffix, synthesize_profile,
    SynthesisParams, DEFAULT_SPECIFIC_ENERGY,
};
use crate::scenario::{run_scenario_logged, verify_schedule, ExperimentResult, VerifyOptions, EMERGENCY_SIZING};
use crate::solver::SolverConfig;
use crate::types::{CoefficientSet, FlightProfile, Phase, Sizing};

#[derive(Debug, Parser)]
#[command(name = "powertrain-opt", version, about = "Hybrid aircraft powertrain sizing and dispatch")]
struct Cli {
    /// Coefficient overrides, one `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Where to write the run manifest (default: manifest.json beside the outputs).
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert recorded fuel flow into a power-demand profile.
    Ingest(IngestArgs),
    /// Generate the synthetic regional-flight profile.
    Synth(SynthArgs),
    /// Size the powertrain and schedule the sources for one experiment.
    Size(SizeArgs),
    /// Verify a schedule against a profile and sizing.
    Simulate(SimulateArgs),
    /// Tabulate experiment results and emit plot-data traces.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Fuel-flow CSV (t_s,fuel_flow_kg_per_h,phase); repeat to average several flights.
    #[arg(long = "input", required = true, value_name = "CSV")]
    inputs: Vec<PathBuf>,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    /// Resampling step, minutes.
    #[arg(long, default_value_t = 1.0)]
    dt_min: f64,
    /// Fuel specific energy, kWh/kg.
    #[arg(long, default_value_t = DEFAULT_SPECIFIC_ENERGY)]
    specific_energy: f64,
    /// Engine efficiency override, e.g. `cruise=0.32`.
    #[arg(long = "efficiency", value_name = "PHASE=VALUE")]
    efficiency: Vec<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[arg(long, default_value_t = 208)]
    seed: u64,
    /// Multiplies every demand value.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct SizeArgs {
    #[arg(long, value_name = "CSV")]
    profile: PathBuf,
    /// 1 nominal, 2 low hydrogen, 3 go-around diversion.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    experiment: u8,
    /// Fix the sizing to this JSON file instead of optimising it.
    #[arg(long, value_name = "JSON")]
    sizing: Option<PathBuf>,
    /// Initial tank fill fraction (default 1.0, 0.55, 0.68 for experiments 1-3).
    #[arg(long)]
    fill: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    go_around_climb_min: f64,
    #[arg(long, default_value_t = 10.0)]
    go_around_descent_min: f64,
    /// Limit only fuel-cell ramp-up.
    #[arg(long)]
    asymmetric_ramp: bool,
    /// Extra objective cost per Al-air kWh.
    #[arg(long)]
    al_energy_weight: Option<f64>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Also write the model in LP file format.
    #[arg(long, value_name = "FILE")]
    export_lp: Option<PathBuf>,
    /// Write the key=value solver log here.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_name = "JSON")]
    sizing: PathBuf,
    #[arg(long, value_name = "CSV")]
    schedule: PathBuf,
    #[arg(long, value_name = "CSV")]
    profile: PathBuf,
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
    /// Check the initial tank content against this fill fraction.
    #[arg(long)]
    fill: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long)]
    asymmetric_ramp: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// result.json files written by `size`.
    #[arg(required = true, value_name = "JSON")]
    results: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Infeasible(String),
    Limit(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Limit(_) => 4,
            Failure::Verification(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Infeasible(m) | Failure::Limit(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Infeasible { ref binding } => Failure::Infeasible(format!(
                "infeasible; binding constraint groups: {}",
                describe_groups(binding)
            )),
            ScenarioError::Limit(m) => Failure::Limit(m),
            ScenarioError::Unbounded => Failure::Limit("problem is unbounded".into()),
            ScenarioError::VerificationFailed(r) => {
                let first: Vec<String> = r
                    .first_violations
                    .iter()
                    .map(|v| format!("{} at step {:?} ({:e})", v.check, v.step, v.residual))
                    .collect();
                Failure::Verification(format!("verification failed: {}", first.join("; ")))
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

fn describe_groups(groups: &[ConstraintGroup]) -> String {
    if groups.is_empty() {
        return "none isolated".into();
    }
    groups
        .iter()
        .map(|g| format!("{} ({:?})", g.label(), g))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let shown: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, shown, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

struct Run {
    manifest: RunManifest,
    manifest_path: PathBuf,
    clock: Instant,
}

impl Run {
    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        let secs = now.duration_since(self.clock).as_secs_f64();
        self.manifest.timings_s.insert(name.to_string(), secs);
        self.clock = now;
    }

    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = io::read_file(path)?;
        self.manifest.record_input(path, &text);
        Ok(text)
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<(), Failure> {
        io::write_file(path, contents)?;
        self.manifest.record_output(path, contents);
        Ok(())
    }

    fn finish(self) -> Result<(), Failure> {
        let text = io::to_json(&self.manifest);
        io::write_file(&self.manifest_path, &text)?;
        Ok(())
    }
}

fn beside(path: &Path) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join("manifest.json")
}

fn execute(cli: &Cli, args: Vec<String>, out: &mut dyn Write) -> Result<(), Failure> {
    let (name, default_manifest) = match &cli.command {
        Command::Ingest(a) => ("ingest", beside(&a.out)),
        Command::Synth(a) => ("synth", beside(&a.out)),
        Command::Size(a) => ("size", a.out_dir.join("manifest.json")),
        Command::Simulate(a) => ("simulate", beside(&a.out)),
        Command::Report(a) => ("report", a.out_dir.join("manifest.json")),
    };
    let mut run = Run {
        manifest: RunManifest::new(name, args),
        manifest_path: cli.manifest.clone().unwrap_or(default_manifest),
        clock: Instant::now(),
    };
    let coefficients = match &cli.config {
        Some(path) => {
            let text = run.read(path)?;
            CoefficientSet::from_config_str(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => CoefficientSet::default(),
    };
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a, &mut run, out),
        Command::Synth(a) => synth(a, &mut run, out),
        Command::Size(a) => size(a, &coefficients, &mut run, out),
        Command::Simulate(a) => simulate(a, &coefficients, &mut run, out),
        Command::Report(a) => report(a, &mut run, out),
    };
    if let serde_json::Value::Object(map) = &mut run.manifest.config {
        map.insert("coefficients".into(), json!(coefficients));
    } else {
        run.manifest.config = json!({ "coefficients": coefficients });
    }
    // the manifest is written whatever the outcome
    let written = run.finish();
    result.and(written)
}

fn ingest(a: &IngestArgs, run: &mut Run, out: &mut dyn Write) -> Result<(), Failure> {
    let mut eff = default_efficiencies();
    for spec in &a.efficiency {
        let (ph, v) = spec
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("--efficiency '{spec}' must be PHASE=VALUE")))?;
        let ph: Phase = ph.trim().parse().map_err(|e| Failure::Input(format!("{e}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("--efficiency '{spec}': bad value")))?;
        eff.insert(ph, v);
    }
    let dt = a.dt_min / 60.0;
    let mut profiles = Vec::new();
    for path in &a.inputs {
        let text = run.read(path)?;
        let records = io::parse_fuel_flow_csv(&text)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let p = fuel_flow_to_power(&records, a.specific_energy, &eff, dt)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        profiles.push(p);
    }
    let profile = average_profiles(&profiles).map_err(|e| Failure::Input(e.to_string()))?;
    run.stage("ingest");
    run.manifest.config = json!({
        "dt_h": dt,
        "specific_energy": a.specific_energy,
        "efficiency": eff,
    });
    run.write(&a.out, &io::profile_csv(&profile))?;
    print_profile_summary(&profile, out);
    Ok(())
}

fn print_profile_summary(p: &FlightProfile, out: &mut dyn Write) {
    let _ = writeln!(
        out,
        "steps={} duration_h={:.4} peak_kw={:.3} energy_kwh={:.3}",
        p.len(),
        p.duration_h(),
        p.peak_kw(),
        p.energy_kwh()
    );
}

fn synth(a: &SynthArgs, run: &mut Run, out: &mut dyn Write) -> Result<(), Failure> {
    if !(a.scale.is_finite() && a.scale > 0.0) {
        return Err(Failure::Input("--scale must be positive".into()));
    }
    let params = SynthesisParams {
        seed: a.seed,
        ..SynthesisParams::default()
    };
    let profile = synthesize_profile(&params)
        .map_err(|e| Failure::Input(e.to_string()))?
        .scaled(a.scale);
    run.manifest.seed = Some(a.seed);
    run.manifest.config = json!({ "synthesis": params, "scale": a.scale });
    run.write(&a.out, &io::profile_csv(&profile))?;
    print_profile_summary(&profile, out);
    Ok(())
}

fn load_profile(run: &mut Run, path: &Path) -> Result<FlightProfile, Failure> {
    let text = run.read(path)?;
    let name = path.file_stem().map_or("profile".into(), |s| s.to_string_lossy().into_owned());
    io::parse_profile_csv(&text, &name).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_sizing(run: &mut Run, path: &Path) -> Result<Sizing, Failure> {
    let text = run.read(path)?;
    io::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn size(a: &SizeArgs, c: &CoefficientSet, run: &mut Run, out: &mut dyn Write) -> Result<(), Failure> {
    let profile = load_profile(run, &a.profile)?;
    let fixed = a.sizing.as_ref().map(|p| load_sizing(run, p)).transpose()?;
    let mut spec = match a.experiment {
        1 => ScenarioSpec {
            fixed_sizing: fixed,
            ..ScenarioSpec::nominal()
        },
        2 => ScenarioSpec::low_hydrogen(fixed.unwrap_or(EMERGENCY_SIZING), 0.55),
        _ => {
            let suffix = go_around_suffix(
                &SynthesisParams {
                    dt_h: profile.dt,
                    ..SynthesisParams::default()
                },
                a.go_around_climb_min,
                a.go_around_descent_min,
            );
            ScenarioSpec::diversion(fixed.unwrap_or(EMERGENCY_SIZING), 0.68, suffix)
        }
    };
    if let Some(f) = a.fill {
        spec.initial_h2_fill = f;
    }
    if a.asymmetric_ramp {
        spec.ramp = RampMode::IncreaseOnly;
    }
    if let Some(w) = a.al_energy_weight {
        spec.objective_weights.al_energy = w;
    }
    let mut solver = SolverConfig::default();
    if let Some(n) = a.max_nodes {
        solver.max_nodes = n;
    }
    if let Some(n) = a.max_iters {
        solver.max_iters = n;
    }
    run.manifest.config = json!({ "scenario": spec, "solver": solver, "verify_tolerance": a.tolerance });
    run.stage("load");

    if let Some(path) = &a.export_lp {
        let model = build_milp(&profile, c, &spec).map_err(|e| Failure::Input(e.to_string()))?;
        run.write(path, &model.problem.to_lp_string())?;
    }

    let name = format!("experiment-{}", a.experiment);
    let mut log_buf = Vec::new();
    let outcome = run_scenario_logged(
        &name,
        &profile,
        c,
        &spec,
        &solver,
        a.tolerance,
        a.log.as_ref().map(|_| &mut log_buf as &mut dyn Write),
    );
    run.stage("solve");
    if let Some(path) = &a.log {
        run.write(path, &String::from_utf8_lossy(&log_buf))?;
    }
    if let Err(ScenarioError::VerificationFailed(report)) = &outcome {
        run.write(&a.out_dir.join("verification.json"), &io::to_json(report))?;
    }
    let result = outcome?;

    let dir = &a.out_dir;
    run.write(&dir.join("sizing.json"), &io::to_json(&result.sizing))?;
    run.write(&dir.join("schedule.csv"), &io::trace_csv(&result.schedule, result.profile.dt))?;
    run.write(&dir.join("profile.csv"), &io::profile_csv(&result.profile))?;
    run.write(&dir.join("result.json"), &io::to_json(&result))?;
    run.stage("write");
    let _ = write!(out, "{}", sizing_table(std::slice::from_ref(&result)));
    Ok(())
}

fn simulate(a: &SimulateArgs, c: &CoefficientSet, run: &mut Run, out: &mut dyn Write) -> Result<(), Failure> {
    let sizing = load_sizing(run, &a.sizing)?;
    let text = run.read(&a.schedule)?;
    let schedule =
        io::parse_trace_csv(&text).map_err(|e| Failure::Input(format!("{}: {e}", a.schedule.display())))?;
    let profile = load_profile(run, &a.profile)?;
    let opts = VerifyOptions {
        tolerance: a.tolerance,
        ramp: if a.asymmetric_ramp {
            RampMode::IncreaseOnly
        } else {
            RampMode::Symmetric
        },
        initial_h2_fill: a.fill,
    };
    run.manifest.config = json!({ "verify": opts });
    let report = verify_schedule(&sizing, &schedule, &profile, c, &opts).map_err(|e| Failure::Input(e.to_string()))?;
    run.stage("verify");
    run.write(&a.out, &io::to_json(&report))?;
    let _ = writeln!(
        out,
        "pass={} max_residual={:e} violations={}",
        report.pass,
        report.residuals.max(),
        report.first_violations.len()
    );
    if report.pass {
        Ok(())
    } else {
        let first: Vec<String> = report
            .first_violations
            .iter()
            .map(|v| format!("{} at step {:?} ({:e})", v.check, v.step, v.residual))
            .collect();
        Err(Failure::Verification(format!("verification failed: {}", first.join("; "))))
    }
}

pub const TABLE_HEADER: [&str; 6] = ["experiment", "fc_kwh", "li_kwh", "al_kwh", "h2_l", "weight_kg"];

/// Fixed-column sizing comparison, one row per result.
pub fn sizing_table(results: &[ExperimentResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16}{:>12}{:>12}{:>12}{:>12}{:>12}",
        TABLE_HEADER[0], TABLE_HEADER[1], TABLE_HEADER[2], TABLE_HEADER[3], TABLE_HEADER[4], TABLE_HEADER[5]
    );
    for r in results {
        let z = r.sizing;
        let _ = writeln!(
            s,
            "{:<16}{:>12.3}{:>12.3}{:>12.3}{:>12.3}{:>12.3}",
            r.name, z.e_fc, z.e_li, z.e_al, z.v_h, r.stats.weight_kg
        );
    }
    s
}

/// The same table as CSV with full-precision values.
pub fn sizing_table_csv(results: &[ExperimentResult]) -> String {
    let mut s = TABLE_HEADER.join(",");
    s.push('\n');
    for r in results {
        let z = r.sizing;
        let _ = writeln!(s, "{},{},{},{},{},{}", r.name, z.e_fc, z.e_li, z.e_al, z.v_h, r.stats.weight_kg);
    }
    s
}

fn report(a: &ReportArgs, run: &mut Run, out: &mut dyn Write) -> Result<(), Failure> {
    let mut results: Vec<ExperimentResult> = Vec::new();
    for path in &a.results {
        let text = run.read(path)?;
        let r: ExperimentResult =
            io::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        if !r.schedule.is_consistent() || r.schedule.steps() != r.profile.len() {
            return Err(Failure::Input(format!("{}: traces do not match the profile", path.display())));
        }
        results.push(r);
    }
    run.stage("load");
    run.write(&a.out_dir.join("table.csv"), &sizing_table_csv(&results))?;
    for r in &results {
        let path = a.out_dir.join(format!("{}.trace.csv", r.name));
        run.write(&path, &io::trace_csv(&r.schedule, r.profile.dt))?;
    }
    let _ = write!(out, "{}", sizing_table(&results));
    Ok(())
}
