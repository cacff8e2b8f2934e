//! Experiment orchestration and the independent schedule verifier.
//!
//! [`verify_schedule`] replays a schedule from its power traces alone. It
//! shares no code with the model builder, so a wrong row in the model shows
//! up as a residual here rather than being reproduced.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::model::{build_milp, ConstraintGroup, PowertrainModel, RampMode, ScenarioMode, ScenarioSpec};
use crate::profile::default_go_around;
use crate::solver::{solve_lp, solve_mip, solve_mip_logged, SolverConfig, Status};
use crate::types::{powertrain_weight, CoefficientSet, FlightProfile, Phase, Schedule, Sizing};

/// Fixed sizing shared by the low-hydrogen and diversion experiments.
pub const EMERGENCY_SIZING: Sizing = Sizing {
    v_h: 370.0,
    e_fc: 480.0,
    e_li: 80.0,
    e_al: 450.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Absolute tolerance on every residual (kW, kg, L, SOC fraction).
    pub tolerance: f64,
    pub ramp: RampMode,
    /// When set, the initial tank content must equal `fill * v_h`.
    pub initial_h2_fill: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            ramp: RampMode::Symmetric,
            initial_h2_fill: None,
        }
    }
}

/// Largest violation of each check; zero means satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// |supply - demand|, kW.
    pub balance: f64,
    /// Mass above budget, kg.
    pub weight: f64,
    /// Simulated SOC outside [0, 1].
    pub soc: f64,
    /// Tank below empty or initial content outside [0, v_h], L.
    pub hydrogen: f64,
    /// Fuel-cell step change beyond the ramp limit, kW.
    pub ramp: f64,
    /// Battery power outside its C-rate window, or Al-air recharge, kW.
    pub rate: f64,
    /// Fuel-cell output above rated capacity, kW.
    pub fc_capacity: f64,
    /// Fuel-cell capacity above what a full tank supports, kWh.
    pub hydrogen_supply: f64,
    /// Al-air power while inactive or fuel-cell power while active, kW;
    /// a reactivation of the fuel cell counts as 1.
    pub mode: f64,
    /// Tank below the reserve threshold while the Al-air mode is off, L.
    pub trigger: f64,
    /// Reported SOC traces against the replay.
    pub soc_trace: f64,
    /// Reported hydrogen trace against the replay, L.
    pub h2_trace: f64,
    /// Initial tank content against the scenario fill, L.
    pub initial_h2: f64,
}

impl Residuals {
    pub fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("balance", self.balance),
            ("weight", self.weight),
            ("soc", self.soc),
            ("hydrogen", self.hydrogen),
            ("ramp", self.ramp),
            ("rate", self.rate),
            ("fc_capacity", self.fc_capacity),
            ("hydrogen_supply", self.hydrogen_supply),
            ("mode", self.mode),
            ("trigger", self.trigger),
            ("soc_trace", self.soc_trace),
            ("h2_trace", self.h2_trace),
            ("initial_h2", self.initial_h2),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// First step at which a check exceeded tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    /// Step index; `None` for checks that are not time-indexed.
    pub step: Option<usize>,
    /// Start time of that step, seconds.
    pub t_s: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residuals: Residuals,
    pub tolerance: f64,
    pub pass: bool,
    pub first_violations: Vec<Violation>,
}

struct Tracker {
    tol: f64,
    dt_s: f64,
    r: Residuals,
    first: Vec<Violation>,
}

impl Tracker {
    fn note(&mut self, check: &'static str, step: Option<usize>, v: f64) {
        let v = if v.is_nan() { f64::INFINITY } else { v.max(0.0) };
        let slot = match check {
            "balance" => &mut self.r.balance,
            "weight" => &mut self.r.weight,
            "soc" => &mut self.r.soc,
            "hydrogen" => &mut self.r.hydrogen,
            "ramp" => &mut self.r.ramp,
            "rate" => &mut self.r.rate,
            "fc_capacity" => &mut self.r.fc_capacity,
            "hydrogen_supply" => &mut self.r.hydrogen_supply,
            "mode" => &mut self.r.mode,
            "trigger" => &mut self.r.trigger,
            "soc_trace" => &mut self.r.soc_trace,
            "h2_trace" => &mut self.r.h2_trace,
            "initial_h2" => &mut self.r.initial_h2,
            _ => unreachable!("unknown check {check}"),
        };
        *slot = slot.max(v);
        if v > self.tol && !self.first.iter().any(|f| f.check == check) {
            self.first.push(Violation {
                check: check.to_string(),
                step,
                t_s: step.map(|t| t as f64 * self.dt_s),
                residual: v,
            });
        }
    }
}

/// Replays `schedule` against `profile` and measures every constraint.
pub fn verify_schedule(
    sizing: &Sizing,
    schedule: &Schedule,
    profile: &FlightProfile,
    c: &CoefficientSet,
    opts: &VerifyOptions,
) -> Result<VerificationReport, ScenarioError> {
    let n = profile.len();
    if schedule.steps() != n || !schedule.is_consistent() {
        return Err(ScenarioError::LengthMismatch {
            schedule: schedule.steps(),
            profile: n,
        });
    }
    let dt = profile.dt;
    let mut k = Tracker {
        tol: opts.tolerance,
        dt_s: dt * 3600.0,
        r: Residuals::default(),
        first: Vec::new(),
    };
    let s = schedule;

    k.note("weight", None, powertrain_weight(sizing, c) - c.weight_budget);
    let full_tank_kwh = sizing.v_h * c.h_mass * c.h_lhv * c.eta_fc;
    k.note("hydrogen_supply", None, sizing.e_fc - full_tank_kwh);

    for t in 0..n {
        let supply = s.p_fc[t] + s.p_li[t] + s.p_al[t];
        k.note("balance", Some(t), (supply - profile.demand[t]).abs());
        let li_cap = c.c_rate * sizing.e_li;
        let al_cap = c.c_rate * sizing.e_al;
        k.note("rate", Some(t), s.p_li[t].abs() - li_cap);
        k.note("rate", Some(t), s.p_al[t] - al_cap);
        k.note("rate", Some(t), -s.p_al[t]);
        k.note("rate", Some(t), -s.p_fc[t]);
        k.note("fc_capacity", Some(t), s.p_fc[t] - sizing.e_fc);
        if s.al_active[t] {
            k.note("mode", Some(t), s.p_fc[t]);
        } else {
            k.note("mode", Some(t), s.p_al[t]);
        }
        if t > 0 && s.al_active[t - 1] && !s.al_active[t] {
            k.note("mode", Some(t), 1.0);
        }
    }

    let limit = c.ramp_fraction * sizing.e_fc;
    for t in 0..n.saturating_sub(1) {
        k.note("ramp", Some(t), s.p_fc[t + 1] - s.p_fc[t] - limit);
        // shutting the fuel cell down for the Al-air mode is not a ramp
        if opts.ramp == RampMode::Symmetric && !s.al_active[t + 1] {
            k.note("ramp", Some(t), s.p_fc[t] - s.p_fc[t + 1] - limit);
        }
    }

    for (cap, power, reported) in [
        (sizing.e_li, &s.p_li, &s.soc_li),
        (sizing.e_al, &s.p_al, &s.soc_al),
    ] {
        let mut soc = 1.0;
        k.note("soc_trace", Some(0), (reported[0] - soc).abs());
        for t in 0..n {
            if cap > 0.0 {
                soc -= power[t] * dt / cap;
            }
            k.note("soc", Some(t + 1), -soc);
            k.note("soc", Some(t + 1), soc - 1.0);
            k.note("soc_trace", Some(t + 1), (reported[t + 1] - soc).abs());
        }
    }

    let litres_per_kwh = 1.0 / (c.h_mass * c.h_lhv * c.eta_fc);
    let threshold = c.h2_reserve_fraction * sizing.v_h;
    let mut h2 = s.h2_volume[0];
    k.note("hydrogen", Some(0), -h2);
    k.note("hydrogen", Some(0), h2 - sizing.v_h);
    if let Some(fill) = opts.initial_h2_fill {
        k.note("initial_h2", Some(0), (h2 - fill * sizing.v_h).abs());
    }
    for t in 0..n {
        if !s.al_active[t] {
            k.note("trigger", Some(t), threshold - h2);
        }
        h2 -= s.p_fc[t] * dt * litres_per_kwh;
        k.note("hydrogen", Some(t + 1), -h2);
        k.note("h2_trace", Some(t + 1), (s.h2_volume[t + 1] - h2).abs());
    }

    let pass = k.r.max() <= opts.tolerance;
    Ok(VerificationReport {
        residuals: k.r,
        tolerance: opts.tolerance,
        pass,
        first_violations: k.first,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub peak_fc_kw: f64,
    pub peak_li_kw: f64,
    pub min_soc_li: f64,
    pub min_soc_al: f64,
    pub final_h2_l: f64,
    pub h2_used_l: f64,
    pub fc_energy_kwh: f64,
    pub li_energy_kwh: f64,
    pub al_energy_kwh: f64,
    pub demand_energy_kwh: f64,
    pub weight_kg: f64,
    pub activation_step: Option<usize>,
}

impl SummaryStats {
    pub fn compute(sizing: &Sizing, s: &Schedule, profile: &FlightProfile, c: &CoefficientSet) -> Self {
        let dt = profile.dt;
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let energy = |v: &[f64]| v.iter().sum::<f64>() * dt;
        Self {
            peak_fc_kw: max(&s.p_fc),
            peak_li_kw: max(&s.p_li),
            min_soc_li: min(&s.soc_li),
            min_soc_al: min(&s.soc_al),
            final_h2_l: *s.h2_volume.last().unwrap_or(&0.0),
            h2_used_l: s.h2_volume.first().unwrap_or(&0.0) - s.h2_volume.last().unwrap_or(&0.0),
            fc_energy_kwh: energy(&s.p_fc),
            li_energy_kwh: energy(&s.p_li),
            al_energy_kwh: energy(&s.p_al),
            demand_energy_kwh: profile.energy_kwh(),
            weight_kg: powertrain_weight(sizing, c),
            activation_step: s.activation_step(),
        }
    }
}

/// Outcome of one build, solve, decode and verify run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub spec: ScenarioSpec,
    pub coefficients: CoefficientSet,
    /// Profile actually optimised, including any diversion suffix.
    pub profile: FlightProfile,
    pub status: Status,
    pub objective: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub sizing: Sizing,
    pub schedule: Schedule,
    pub report: VerificationReport,
    pub stats: SummaryStats,
}

/// Knobs shared by the three experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    pub verify_tolerance: f64,
    /// Sizing of the low-hydrogen and diversion runs.
    pub emergency_sizing: Sizing,
    pub low_h2_fill: f64,
    pub diversion_fill: f64,
    pub go_around: Vec<(f64, Phase)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            verify_tolerance: 1e-6,
            emergency_sizing: EMERGENCY_SIZING,
            low_h2_fill: 0.55,
            diversion_fill: 0.68,
            go_around: default_go_around(),
        }
    }
}

/// Builds, solves, decodes and verifies one scenario.
pub fn run_scenario(
    name: &str,
    profile: &FlightProfile,
    c: &CoefficientSet,
    spec: &ScenarioSpec,
    solver: &SolverConfig,
    verify_tolerance: f64,
) -> Result<ExperimentResult, ScenarioError> {
    run_scenario_logged(name, profile, c, spec, solver, verify_tolerance, None)
}

/// As [`run_scenario`], streaming the solver log to `log`.
pub fn run_scenario_logged(
    name: &str,
    profile: &FlightProfile,
    c: &CoefficientSet,
    spec: &ScenarioSpec,
    solver: &SolverConfig,
    verify_tolerance: f64,
    log: Option<&mut dyn Write>,
) -> Result<ExperimentResult, ScenarioError> {
    let model = build_milp(profile, c, spec)?;
    let sol = solve_mip_logged(&model.problem, solver, log)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(ScenarioError::Infeasible {
                binding: diagnose_infeasibility(&model, solver),
            })
        }
        Status::Unbounded => return Err(ScenarioError::Unbounded),
        Status::IterLimit => return Err(ScenarioError::Limit("simplex iteration limit".into())),
        Status::NodeLimit => return Err(ScenarioError::Limit("branch-and-bound node limit".into())),
    }
    let (sizing, schedule) = model.decode(&sol.values);
    let opts = VerifyOptions {
        tolerance: verify_tolerance,
        ramp: spec.ramp,
        initial_h2_fill: Some(spec.initial_h2_fill),
    };
    let report = verify_schedule(&sizing, &schedule, &model.profile, c, &opts)?;
    if !report.pass {
        return Err(ScenarioError::VerificationFailed(Box::new(report)));
    }
    let stats = SummaryStats::compute(&sizing, &schedule, &model.profile, c);
    Ok(ExperimentResult {
        name: name.to_string(),
        spec: spec.clone(),
        coefficients: *c,
        profile: model.profile,
        status: sol.status,
        objective: sol.objective,
        nodes: sol.nodes,
        iterations: sol.iterations,
        sizing,
        schedule,
        report,
        stats,
    })
}

/// Constraint groups whose removal alone makes the problem feasible.
///
/// Uses the continuous relaxation when that is already infeasible, and the
/// full mixed-integer problem otherwise.
pub fn diagnose_infeasibility(model: &PowertrainModel, solver: &SolverConfig) -> Vec<ConstraintGroup> {
    let relaxed_infeasible = matches!(
        solve_lp(&model.problem, solver).map(|s| s.status),
        Ok(Status::Infeasible)
    );
    ConstraintGroup::ALL
        .into_iter()
        .filter(|g| model.rows_in(*g) > 0)
        .filter(|g| {
            let p = model.without_group(*g);
            let status = if relaxed_infeasible {
                solve_lp(&p, solver).map(|s| s.status)
            } else {
                solve_mip(&p, solver).map(|s| s.status)
            };
            matches!(status, Ok(Status::Optimal) | Ok(Status::Unbounded))
        })
        .collect()
}

/// Nominal flight: fuel cell and Li-ion only, sizing optimised.
pub fn run_experiment_1(
    profile: &FlightProfile,
    c: &CoefficientSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult, ScenarioError> {
    let spec = ScenarioSpec::nominal();
    run_scenario("experiment-1", profile, c, &spec, &cfg.solver, cfg.verify_tolerance)
}

/// Partially filled tank: the Al-air battery takes over below the reserve.
pub fn run_experiment_2(
    profile: &FlightProfile,
    c: &CoefficientSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult, ScenarioError> {
    let spec = ScenarioSpec::low_hydrogen(cfg.emergency_sizing, cfg.low_h2_fill);
    run_scenario("experiment-2", profile, c, &spec, &cfg.solver, cfg.verify_tolerance)
}

/// Go-around appended to the flight.
pub fn run_experiment_3(
    profile: &FlightProfile,
    c: &CoefficientSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult, ScenarioError> {
    let spec = ScenarioSpec::diversion(cfg.emergency_sizing, cfg.diversion_fill, cfg.go_around.clone());
    run_scenario("experiment-3", profile, c, &spec, &cfg.solver, cfg.verify_tolerance)
}

impl ExperimentResult {
    pub fn mode(&self) -> ScenarioMode {
        self.spec.mode
    }
}
