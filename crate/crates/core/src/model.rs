//! Time-indexed mixed-integer model of powertrain sizing and dispatch.
//!
//! Columns, in order: the four sizing variables; per-step fuel-cell, Li-ion
//! and Al-air power; per-boundary stored Li-ion and Al-air energy and tank
//! hydrogen (boundaries 1..=T; boundary 0 is substituted by its initial
//! value); per-step Al-air mode binaries. State of charge is carried as
//! stored energy (kWh) so that the recursion stays linear while capacities
//! are decision variables.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::lp::{LpProblem, Relation};
use crate::types::{CoefficientSet, FlightProfile, Phase, Schedule, Sizing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioMode {
    /// Fuel cell and Li-ion only; the Al-air capacity is pinned to zero.
    Nominal,
    /// Tank starts partially filled so the reserve threshold is crossed.
    LowHydrogen,
    /// A go-around segment is appended to the profile.
    Diversion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RampMode {
    /// Both increases and decreases are limited.
    #[default]
    Symmetric,
    /// Only increases are limited.
    IncreaseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Multiplier of the mass term (per kg).
    pub weight: f64,
    /// Multiplier of the summed source power (per kW and step); `None`
    /// means the profile timestep, which turns the sum into kWh.
    pub power: Option<f64>,
    /// Extra cost per kWh drawn from the Al-air battery. The power term is
    /// constant under the balance rows, so this is what makes the emergency
    /// reserve the last resort.
    pub al_energy: f64,
    /// Cost per step spent in Al-air mode, so the mode is entered only
    /// when needed and as late as possible.
    pub activation: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            weight: 1.0,
            power: None,
            al_energy: 0.01,
            activation: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mode: ScenarioMode,
    /// When set, the sizing is fixed and only dispatch is optimised.
    pub fixed_sizing: Option<Sizing>,
    /// Initial hydrogen as a fraction of tank volume.
    pub initial_h2_fill: f64,
    /// Extra (demand kW, phase) steps appended to the profile; required
    /// exactly for [`ScenarioMode::Diversion`].
    pub diversion_suffix: Option<Vec<(f64, Phase)>>,
    pub objective_weights: ObjectiveWeights,
    pub ramp: RampMode,
}

impl ScenarioSpec {
    pub fn nominal() -> Self {
        Self {
            mode: ScenarioMode::Nominal,
            fixed_sizing: None,
            initial_h2_fill: 1.0,
            diversion_suffix: None,
            objective_weights: ObjectiveWeights::default(),
            ramp: RampMode::Symmetric,
        }
    }

    pub fn low_hydrogen(sizing: Sizing, fill: f64) -> Self {
        Self {
            mode: ScenarioMode::LowHydrogen,
            fixed_sizing: Some(sizing),
            initial_h2_fill: fill,
            ..Self::nominal()
        }
    }

    pub fn diversion(sizing: Sizing, fill: f64, suffix: Vec<(f64, Phase)>) -> Self {
        Self {
            mode: ScenarioMode::Diversion,
            fixed_sizing: Some(sizing),
            initial_h2_fill: fill,
            diversion_suffix: Some(suffix),
            ..Self::nominal()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if !(0.0..=1.0).contains(&self.initial_h2_fill) {
            return bad("initial_h2_fill must lie in [0, 1]");
        }
        match (self.mode, &self.diversion_suffix) {
            (ScenarioMode::Diversion, None) => return bad("diversion mode needs a suffix"),
            (ScenarioMode::Diversion, Some(s)) => {
                if s.iter().any(|(d, _)| !(d.is_finite() && *d >= 0.0)) {
                    return bad("suffix demand must be non-negative");
                }
            }
            (_, Some(_)) => return bad("only diversion mode takes a suffix"),
            (_, None) => {}
        }
        if let Some(s) = &self.fixed_sizing {
            if !s.is_valid() {
                return bad("fixed sizing must be non-negative");
            }
            if self.mode == ScenarioMode::Nominal && s.e_al != 0.0 {
                return bad("nominal mode excludes the Al-air battery");
            }
        }
        let w = self.objective_weights;
        let lp = w.power.unwrap_or(1.0);
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(w.weight) && ok(lp) && ok(w.al_energy) && ok(w.activation)) {
            return bad("objective weights must be non-negative");
        }
        if w.weight == 0.0 && w.power == Some(0.0) && w.al_energy == 0.0 && w.activation == 0.0 {
            return bad("objective weights cannot both be zero");
        }
        Ok(())
    }
}

/// Constraint families of the model. Every row belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintGroup {
    /// Powertrain mass within budget.
    Weight,
    /// Supply equals demand at every step.
    Balance,
    /// Hydrogen supply covers fuel-cell capacity, plus the tank ledger.
    Hydrogen,
    /// Fuel-cell ramp limit.
    Ramp,
    /// Stored-energy recursion of both batteries.
    Soc,
    /// Battery C-rate limits.
    Rate,
    /// Al-air / fuel-cell mode exclusivity and the low-hydrogen trigger.
    Mode,
    /// Fuel-cell output within rated capacity.
    FcCapacity,
    /// Mode binaries never switch back.
    ModeOrder,
    /// Stored Li-ion energy within capacity.
    SocCapacity,
}

impl ConstraintGroup {
    pub const ALL: [ConstraintGroup; 10] = [
        ConstraintGroup::Weight,
        ConstraintGroup::Balance,
        ConstraintGroup::Hydrogen,
        ConstraintGroup::Ramp,
        ConstraintGroup::Soc,
        ConstraintGroup::Rate,
        ConstraintGroup::Mode,
        ConstraintGroup::FcCapacity,
        ConstraintGroup::ModeOrder,
        ConstraintGroup::SocCapacity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ConstraintGroup::Weight => "W",
            ConstraintGroup::Balance => "B",
            ConstraintGroup::Hydrogen => "H",
            ConstraintGroup::Ramp => "R",
            ConstraintGroup::Soc => "S",
            ConstraintGroup::Rate => "C",
            ConstraintGroup::Mode => "Z",
            ConstraintGroup::FcCapacity => "P",
            ConstraintGroup::ModeOrder => "ZM",
            ConstraintGroup::SocCapacity => "SC",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.label() == s)
    }

    /// Number of rows the builder emits for `steps` steps.
    pub fn expected_rows(self, steps: usize, ramp: RampMode) -> usize {
        let t = steps;
        match self {
            ConstraintGroup::Weight => 1,
            ConstraintGroup::Balance => t,
            ConstraintGroup::Hydrogen => t + 1,
            ConstraintGroup::Ramp => match ramp {
                RampMode::Symmetric => 2 * t.saturating_sub(1),
                RampMode::IncreaseOnly => t.saturating_sub(1),
            },
            ConstraintGroup::Soc => 2 * t,
            ConstraintGroup::Rate => 3 * t,
            ConstraintGroup::Mode => 3 * t,
            ConstraintGroup::FcCapacity => t,
            ConstraintGroup::ModeOrder => t.saturating_sub(1),
            ConstraintGroup::SocCapacity => t,
        }
    }
}

/// Column indices of the model variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarLayout {
    pub steps: usize,
    pub v_h: usize,
    pub e_fc: usize,
    pub e_li: usize,
    pub e_al: usize,
    p_fc0: usize,
    p_li0: usize,
    p_al0: usize,
    q_li1: usize,
    q_al1: usize,
    h2_1: usize,
    z0: usize,
}

impl VarLayout {
    fn new(steps: usize) -> Self {
        let t = steps;
        Self {
            steps,
            v_h: 0,
            e_fc: 1,
            e_li: 2,
            e_al: 3,
            p_fc0: 4,
            p_li0: 4 + t,
            p_al0: 4 + 2 * t,
            q_li1: 4 + 3 * t,
            q_al1: 4 + 4 * t,
            h2_1: 4 + 5 * t,
            z0: 4 + 6 * t,
        }
    }

    pub fn num_vars(&self) -> usize {
        4 + 7 * self.steps
    }

    pub fn p_fc(&self, t: usize) -> usize {
        self.p_fc0 + t
    }
    pub fn p_li(&self, t: usize) -> usize {
        self.p_li0 + t
    }
    pub fn p_al(&self, t: usize) -> usize {
        self.p_al0 + t
    }
    /// Stored Li-ion energy at boundary `b` (1..=steps).
    pub fn q_li(&self, b: usize) -> usize {
        self.q_li1 + b - 1
    }
    pub fn q_al(&self, b: usize) -> usize {
        self.q_al1 + b - 1
    }
    /// Tank hydrogen at boundary `b` (1..=steps).
    pub fn h2(&self, b: usize) -> usize {
        self.h2_1 + b - 1
    }
    pub fn z(&self, t: usize) -> usize {
        self.z0 + t
    }
}

/// A built model plus what is needed to decode its solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct PowertrainModel {
    pub problem: LpProblem,
    pub layout: VarLayout,
    pub row_groups: Vec<ConstraintGroup>,
    /// The optimised profile, including any diversion suffix.
    pub profile: FlightProfile,
    pub coefficients: CoefficientSet,
    pub spec: ScenarioSpec,
    /// Big-M for the power-mode rows, kW.
    pub big_m: f64,
    /// Big-M for the hydrogen trigger rows, L.
    pub volume_big_m: f64,
}

/// Twice the peak demand; 0 for an all-zero profile.
pub fn big_m_value(profile: &FlightProfile, _c: &CoefficientSet) -> f64 {
    2.0 * profile.peak_kw()
}

/// Largest tank volume any optimal sizing can need.
///
/// Fuel-cell output never exceeds total demand and rated fuel-cell capacity
/// is limited by the weight budget, so a bigger tank only adds mass.
fn tank_volume_cap(profile: &FlightProfile, c: &CoefficientSet, fill: f64) -> f64 {
    let k = c.kwh_per_litre();
    let fc_cap = c.weight_budget / c.c_fc_wt;
    let margin = fill - c.h2_reserve_fraction;
    let energy = if margin > 0.0 {
        fc_cap.max(profile.energy_kwh() / margin)
    } else {
        fc_cap
    };
    (energy / k).max(0.0)
}

struct Rows<'a> {
    p: &'a mut LpProblem,
    groups: Vec<ConstraintGroup>,
}

impl Rows<'_> {
    fn add(
        &mut self,
        group: ConstraintGroup,
        name: String,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        rel: Relation,
        rhs: f64,
    ) {
        self.p
            .add_constraint(format!("{}:{name}", group.label()), coeffs, rel, rhs);
        self.groups.push(group);
    }
}

pub fn build_milp(
    profile: &FlightProfile,
    c: &CoefficientSet,
    spec: &ScenarioSpec,
) -> Result<PowertrainModel, ModelError> {
    if profile.is_empty() {
        return Err(ModelError::EmptyProfile);
    }
    profile
        .check()
        .map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
    spec.validate()?;
    c.validate()?;

    let profile = match &spec.diversion_suffix {
        Some(suffix) => profile.extended(suffix),
        None => profile.clone(),
    };
    let steps = profile.len();
    let dt = profile.dt;
    let lay = VarLayout::new(steps);
    let fill = spec.initial_h2_fill;
    let frac = c.h2_reserve_fraction;

    let mut big_m = big_m_value(&profile, c);
    if big_m <= 0.0 {
        big_m = 1.0;
    }
    let v_cap = match spec.fixed_sizing {
        Some(s) => s.v_h,
        None => tank_volume_cap(&profile, c, fill),
    };
    let volume_big_m = if frac * v_cap > 0.0 { frac * v_cap } else { 1.0 };

    let lw = spec.objective_weights.weight;
    let lp_w = spec.objective_weights.power.unwrap_or(dt);

    let inf = f64::INFINITY;
    let mut p = LpProblem::new();
    p.add_var("v_h", lw * c.c_h_wt, 0.0, v_cap);
    p.add_var("e_fc", lw * c.c_fc_wt, 0.0, inf);
    p.add_var("e_li", lw * c.c_li_wt, 0.0, inf);
    p.add_var("e_al", lw * c.c_al_wt, 0.0, inf);
    if spec.mode == ScenarioMode::Nominal {
        p.fix_var(lay.e_al, 0.0);
    }
    if let Some(s) = spec.fixed_sizing {
        p.fix_var(lay.v_h, s.v_h);
        p.fix_var(lay.e_fc, s.e_fc);
        p.fix_var(lay.e_li, s.e_li);
        p.fix_var(lay.e_al, s.e_al);
    }
    for t in 0..steps {
        p.add_var(format!("p_fc[{t}]"), lp_w, 0.0, inf);
    }
    for t in 0..steps {
        p.add_var(format!("p_li[{t}]"), lp_w, -inf, inf);
    }
    let al_w = lp_w + spec.objective_weights.al_energy * dt;
    for t in 0..steps {
        p.add_var(format!("p_al[{t}]"), al_w, 0.0, inf);
    }
    for b in 1..=steps {
        p.add_var(format!("q_li[{b}]"), 0.0, 0.0, inf);
    }
    for b in 1..=steps {
        p.add_var(format!("q_al[{b}]"), 0.0, 0.0, inf);
    }
    for b in 1..=steps {
        p.add_var(format!("h2[{b}]"), 0.0, 0.0, inf);
    }
    for t in 0..steps {
        let z = p.add_binary(format!("z[{t}]"), spec.objective_weights.activation);
        // without an Al-air battery there is no mode to switch to
        if spec.mode == ScenarioMode::Nominal {
            p.fix_var(z, 0.0);
        }
    }
    debug_assert_eq!(p.num_vars(), lay.num_vars());

    let k = c.kwh_per_litre();
    let litres_per_kw_step = dt / k;
    let ramp = c.ramp_fraction;
    let rate = c.c_rate;
    let mut rows = Rows {
        p: &mut p,
        groups: Vec::new(),
    };
    use ConstraintGroup as G;

    rows.add(
        G::Weight,
        "weight".into(),
        [
            (lay.v_h, c.c_h_wt),
            (lay.e_fc, c.c_fc_wt),
            (lay.e_li, c.c_li_wt),
            (lay.e_al, c.c_al_wt),
        ],
        Relation::Le,
        c.weight_budget,
    );

    for t in 0..steps {
        rows.add(
            G::Balance,
            format!("balance[{t}]"),
            [(lay.p_fc(t), 1.0), (lay.p_li(t), 1.0), (lay.p_al(t), 1.0)],
            Relation::Eq,
            profile.demand[t],
        );
    }

    rows.add(
        G::Hydrogen,
        "supply".into(),
        [(lay.v_h, k), (lay.e_fc, -1.0)],
        Relation::Ge,
        0.0,
    );
    for t in 0..steps {
        // h2[t+1] = h2[t] - p_fc[t] * dt / k, with h2[0] = fill * v_h
        let prev = if t == 0 {
            (lay.v_h, -fill)
        } else {
            (lay.h2(t), -1.0)
        };
        rows.add(
            G::Hydrogen,
            format!("ledger[{t}]"),
            [(lay.h2(t + 1), 1.0), prev, (lay.p_fc(t), litres_per_kw_step)],
            Relation::Eq,
            0.0,
        );
    }

    for t in 0..steps.saturating_sub(1) {
        rows.add(
            G::Ramp,
            format!("up[{t}]"),
            [(lay.p_fc(t + 1), 1.0), (lay.p_fc(t), -1.0), (lay.e_fc, -ramp)],
            Relation::Le,
            0.0,
        );
        if spec.ramp == RampMode::Symmetric {
            // a shutdown into Al-air mode is exempt from the ramp-down limit
            rows.add(
                G::Ramp,
                format!("down[{t}]"),
                [
                    (lay.p_fc(t), 1.0),
                    (lay.p_fc(t + 1), -1.0),
                    (lay.e_fc, -ramp),
                    (lay.z(t + 1), -big_m),
                ],
                Relation::Le,
                0.0,
            );
        }
    }

    for (name, cap, power, store) in [
        ("li", lay.e_li, lay.p_li0, lay.q_li1),
        ("al", lay.e_al, lay.p_al0, lay.q_al1),
    ] {
        for t in 0..steps {
            // q[t+1] = q[t] - p[t] * dt, with q[0] = capacity (full)
            let prev = if t == 0 { (cap, -1.0) } else { (store + t - 1, -1.0) };
            rows.add(
                G::Soc,
                format!("{name}[{t}]"),
                [(store + t, 1.0), prev, (power + t, dt)],
                Relation::Eq,
                0.0,
            );
        }
    }

    for t in 0..steps {
        rows.add(
            G::Rate,
            format!("li_max[{t}]"),
            [(lay.p_li(t), 1.0), (lay.e_li, -rate)],
            Relation::Le,
            0.0,
        );
        rows.add(
            G::Rate,
            format!("li_min[{t}]"),
            [(lay.p_li(t), 1.0), (lay.e_li, rate)],
            Relation::Ge,
            0.0,
        );
        rows.add(
            G::Rate,
            format!("al_max[{t}]"),
            [(lay.p_al(t), 1.0), (lay.e_al, -rate)],
            Relation::Le,
            0.0,
        );
    }

    for t in 0..steps {
        rows.add(
            G::Mode,
            format!("al_on[{t}]"),
            [(lay.p_al(t), 1.0), (lay.z(t), -big_m)],
            Relation::Le,
            0.0,
        );
        rows.add(
            G::Mode,
            format!("fc_off[{t}]"),
            [(lay.p_fc(t), 1.0), (lay.z(t), big_m)],
            Relation::Le,
            big_m,
        );
        // reserve fraction * v_h - h2[t] <= M_v * z[t]
        let coeffs: Vec<(usize, f64)> = if t == 0 {
            vec![(lay.v_h, frac - fill), (lay.z(0), -volume_big_m)]
        } else {
            vec![(lay.v_h, frac), (lay.h2(t), -1.0), (lay.z(t), -volume_big_m)]
        };
        rows.add(G::Mode, format!("trigger[{t}]"), coeffs, Relation::Le, 0.0);
    }

    for t in 0..steps {
        rows.add(
            G::FcCapacity,
            format!("fc_cap[{t}]"),
            [(lay.p_fc(t), 1.0), (lay.e_fc, -1.0)],
            Relation::Le,
            0.0,
        );
    }

    for t in 0..steps.saturating_sub(1) {
        rows.add(
            G::ModeOrder,
            format!("order[{t}]"),
            [(lay.z(t), 1.0), (lay.z(t + 1), -1.0)],
            Relation::Le,
            0.0,
        );
    }

    for b in 1..=steps {
        rows.add(
            G::SocCapacity,
            format!("li_cap[{b}]"),
            [(lay.q_li(b), 1.0), (lay.e_li, -1.0)],
            Relation::Le,
            0.0,
        );
    }

    let row_groups = rows.groups;
    Ok(PowertrainModel {
        problem: p,
        layout: lay,
        row_groups,
        profile,
        coefficients: *c,
        spec: spec.clone(),
        big_m,
        volume_big_m,
    })
}

impl PowertrainModel {
    pub fn rows_in(&self, group: ConstraintGroup) -> usize {
        self.row_groups.iter().filter(|g| **g == group).count()
    }

    /// Copy of the problem with every row of `group` removed.
    pub fn without_group(&self, group: ConstraintGroup) -> LpProblem {
        let mut p = self.problem.clone();
        p.constraints = self
            .problem
            .constraints
            .iter()
            .zip(&self.row_groups)
            .filter(|(_, g)| **g != group)
            .map(|(r, _)| r.clone())
            .collect();
        p
    }

    /// Splits a solution vector into sizing and schedule traces.
    pub fn decode(&self, x: &[f64]) -> (Sizing, Schedule) {
        let lay = &self.layout;
        let n = lay.steps;
        let sizing = Sizing::new(x[lay.v_h], x[lay.e_fc], x[lay.e_li], x[lay.e_al]);
        let soc = |cap: f64, store: fn(&VarLayout, usize) -> usize| -> Vec<f64> {
            let mut v = Vec::with_capacity(n + 1);
            v.push(1.0);
            for b in 1..=n {
                let f = if cap > 1e-9 { x[store(lay, b)] / cap } else { 1.0 };
                // rounding noise at an end of the range, not a real excursion
                let f = if (-1e-9..=1.0 + 1e-9).contains(&f) { f.clamp(0.0, 1.0) } else { f };
                v.push(f);
            }
            v
        };
        let mut h2 = Vec::with_capacity(n + 1);
        h2.push(self.spec.initial_h2_fill * sizing.v_h);
        h2.extend((1..=n).map(|b| x[lay.h2(b)]));
        let schedule = Schedule {
            p_fc: (0..n).map(|t| x[lay.p_fc(t)]).collect(),
            p_li: (0..n).map(|t| x[lay.p_li(t)]).collect(),
            p_al: (0..n).map(|t| x[lay.p_al(t)]).collect(),
            soc_li: soc(sizing.e_li, VarLayout::q_li),
            soc_al: soc(sizing.e_al, VarLayout::q_al),
            h2_volume: h2,
            al_active: (0..n).map(|t| x[lay.z(t)] > 0.5).collect(),
        };
        (sizing, schedule)
    }
}
