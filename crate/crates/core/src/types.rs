//! Unit-disciplined domain types shared by the model builder, the solver
//! post-processing and the independent verifier.
//!
//! Units are fixed crate-wide: power in kW, energy in kWh, time in hours,
//! volume in litres and mass in kg.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Flight phase of a single timestep.
///
/// The declaration order doubles as the tie-break order used when
/// averaging phase labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Taxi,
    Takeoff,
    Climb,
    Cruise,
    Descent,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Taxi,
        Phase::Takeoff,
        Phase::Climb,
        Phase::Cruise,
        Phase::Descent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Taxi => "taxi",
            Phase::Takeoff => "takeoff",
            Phase::Climb => "climb",
            Phase::Cruise => "cruise",
            Phase::Descent => "descent",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPhase(pub String);

impl fmt::Display for UnknownPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown flight phase '{}'", self.0)
    }
}

impl std::error::Error for UnknownPhase {}

impl FromStr for Phase {
    type Err = UnknownPhase;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownPhase(t.to_string()))
    }
}

/// Weight coefficients, fuel-cell properties and operating limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    /// Tank weight per litre of hydrogen volume, kg/L.
    pub c_h_wt: f64,
    /// Fuel-cell weight per kWh of rated capacity, kg/kWh.
    pub c_fc_wt: f64,
    /// Li-ion weight per kWh, kg/kWh.
    pub c_li_wt: f64,
    /// Al-air weight per kWh, kg/kWh.
    pub c_al_wt: f64,
    /// Fuel-cell conversion efficiency.
    pub eta_fc: f64,
    /// Hydrogen lower heating value, kWh/kg.
    pub h_lhv: f64,
    /// Hydrogen mass per litre of tank volume, kg/L.
    pub h_mass: f64,
    /// Maximum powertrain mass, kg.
    pub weight_budget: f64,
    /// Per-step fuel-cell ramp limit as a fraction of `E_fc`.
    pub ramp_fraction: f64,
    /// Hydrogen fraction of the tank volume below which the Al-air battery takes over.
    pub h2_reserve_fraction: f64,
    /// Battery power limit in multiples of capacity per hour.
    pub c_rate: f64,
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self {
            c_h_wt: 1.0 / 11000.0,
            c_fc_wt: 1.5,
            c_li_wt: 4.0,
            c_al_wt: 0.1234,
            eta_fc: 0.55,
            h_lhv: 33.33,
            h_mass: 0.09,
            weight_budget: 1200.0,
            ramp_fraction: 0.1,
            h2_reserve_fraction: 0.10,
            c_rate: 1.0,
        }
    }
}

impl CoefficientSet {
    /// Field names in canonical config-file order.
    pub const KEYS: [&'static str; 11] = [
        "c_h_wt",
        "c_fc_wt",
        "c_li_wt",
        "c_al_wt",
        "eta_fc",
        "h_lhv",
        "h_mass",
        "weight_budget",
        "ramp_fraction",
        "h2_reserve_fraction",
        "c_rate",
    ];

    pub fn validate(&self) -> Result<(), ConfigError> {
        for key in Self::KEYS {
            let v = self.get(key).unwrap_or(f64::NAN);
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!("{key} must be finite")));
            }
        }
        // h2_reserve_fraction may be zero, weight_budget may be zero (forced infeasibility)
        for key in [
            "c_h_wt",
            "c_fc_wt",
            "c_li_wt",
            "c_al_wt",
            "eta_fc",
            "h_lhv",
            "h_mass",
            "ramp_fraction",
            "c_rate",
        ] {
            if self.get(key).unwrap_or(0.0) <= 0.0 {
                return Err(ConfigError::Invalid(format!("{key} must be > 0")));
            }
        }
        if self.weight_budget < 0.0 {
            return Err(ConfigError::Invalid("weight_budget must be >= 0".into()));
        }
        if self.eta_fc > 1.0 {
            return Err(ConfigError::Invalid("eta_fc must be <= 1".into()));
        }
        if !(0.0..1.0).contains(&self.h2_reserve_fraction) {
            return Err(ConfigError::Invalid(
                "h2_reserve_fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "c_h_wt" => self.c_h_wt,
            "c_fc_wt" => self.c_fc_wt,
            "c_li_wt" => self.c_li_wt,
            "c_al_wt" => self.c_al_wt,
            "eta_fc" => self.eta_fc,
            "h_lhv" => self.h_lhv,
            "h_mass" => self.h_mass,
            "weight_budget" => self.weight_budget,
            "ramp_fraction" => self.ramp_fraction,
            "h2_reserve_fraction" => self.h2_reserve_fraction,
            "c_rate" => self.c_rate,
            _ => return None,
        })
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c_h_wt" => &mut self.c_h_wt,
            "c_fc_wt" => &mut self.c_fc_wt,
            "c_li_wt" => &mut self.c_li_wt,
            "c_al_wt" => &mut self.c_al_wt,
            "eta_fc" => &mut self.eta_fc,
            "h_lhv" => &mut self.h_lhv,
            "h_mass" => &mut self.h_mass,
            "weight_budget" => &mut self.weight_budget,
            "ramp_fraction" => &mut self.ramp_fraction,
            "h2_reserve_fraction" => &mut self.h2_reserve_fraction,
            "c_rate" => &mut self.c_rate,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        let slot = self
            .slot(key)
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        *slot = value;
        Ok(())
    }

    /// kWh of fuel-cell output obtained per litre of tank volume.
    pub fn kwh_per_litre(&self) -> f64 {
        self.h_mass * self.h_lhv * self.eta_fc
    }

    /// Parse the `key = value` config format on top of `base`.
    ///
    /// Blank lines and `#` comments are skipped. Values may be written as
    /// plain numbers or as a ratio `a/b`. Unknown or repeated keys are errors.
    pub fn parse_overrides(base: CoefficientSet, text: &str) -> Result<Self, ConfigError> {
        let mut out = base;
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: "expected 'key = value'".into(),
            })?;
            let key = key.trim();
            if out.get(key).is_none() {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if seen.contains(&key) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("duplicate key '{key}'"),
                });
            }
            seen.push(key);
            let v = parse_number(value.trim()).ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("cannot parse value '{}'", value.trim()),
            })?;
            out.set(key, v)?;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_overrides(Self::default(), text)
    }

    /// Canonical config text; parsing it back yields a bit-identical set.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for key in Self::KEYS {
            s.push_str(&format!("{key} = {:?}\n", self.get(key).unwrap_or(f64::NAN)));
        }
        s
    }
}

fn parse_number(s: &str) -> Option<f64> {
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        Some(n / d)
    } else {
        s.parse().ok()
    }
}

/// The four design variables.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sizing {
    /// Hydrogen tank volume, L.
    pub v_h: f64,
    /// Fuel-cell capacity, kWh.
    pub e_fc: f64,
    /// Li-ion capacity, kWh.
    pub e_li: f64,
    /// Al-air capacity, kWh.
    pub e_al: f64,
}

impl Sizing {
    pub fn new(v_h: f64, e_fc: f64, e_li: f64, e_al: f64) -> Self {
        Self { v_h, e_fc, e_li, e_al }
    }

    pub fn is_valid(&self) -> bool {
        [self.v_h, self.e_fc, self.e_li, self.e_al]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Uniformly sampled power-demand profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightProfile {
    pub name: String,
    /// Step length, hours.
    pub dt: f64,
    /// Demand per step, kW.
    pub demand: Vec<f64>,
    pub phase: Vec<Phase>,
}

impl FlightProfile {
    pub fn new(
        name: impl Into<String>,
        dt: f64,
        demand: Vec<f64>,
        phase: Vec<Phase>,
    ) -> Result<Self, ProfileShapeError> {
        let p = Self {
            name: name.into(),
            dt,
            demand,
            phase,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ProfileShapeError> {
        if self.demand.is_empty() {
            return Err(ProfileShapeError::Empty);
        }
        if self.demand.len() != self.phase.len() {
            return Err(ProfileShapeError::LengthMismatch {
                demand: self.demand.len(),
                phase: self.phase.len(),
            });
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ProfileShapeError::BadStep(self.dt));
        }
        if let Some(i) = self.demand.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(ProfileShapeError::BadDemand { index: i });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn duration_h(&self) -> f64 {
        self.dt * self.len() as f64
    }

    pub fn peak_kw(&self) -> f64 {
        self.demand.iter().copied().fold(0.0, f64::max)
    }

    pub fn energy_kwh(&self) -> f64 {
        self.demand.iter().sum::<f64>() * self.dt
    }

    /// Same profile with every demand value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            name: self.name.clone(),
            dt: self.dt,
            demand: self.demand.iter().map(|d| d * factor).collect(),
            phase: self.phase.clone(),
        }
    }

    /// Profile extended by `extra` steps of (demand, phase).
    pub fn extended(&self, extra: &[(f64, Phase)]) -> Self {
        let mut out = self.clone();
        for &(d, ph) in extra {
            out.demand.push(d);
            out.phase.push(ph);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileShapeError {
    #[error("profile has no steps")]
    Empty,
    #[error("demand has {demand} steps but phase has {phase}")]
    LengthMismatch { demand: usize, phase: usize },
    #[error("timestep must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("demand at step {index} is negative or not finite")]
    BadDemand { index: usize },
}

/// Per-step dispatch and per-boundary state traces.
///
/// Power traces have one entry per step; `soc_li`, `soc_al` and
/// `h2_volume` have one entry per step boundary (steps + 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub p_fc: Vec<f64>,
    /// Negative while charging.
    pub p_li: Vec<f64>,
    pub p_al: Vec<f64>,
    pub soc_li: Vec<f64>,
    pub soc_al: Vec<f64>,
    /// Remaining hydrogen, L.
    pub h2_volume: Vec<f64>,
    pub al_active: Vec<bool>,
}

impl Schedule {
    pub fn steps(&self) -> usize {
        self.p_fc.len()
    }

    /// True when every trace has the length implied by `p_fc`.
    pub fn is_consistent(&self) -> bool {
        let n = self.p_fc.len();
        self.p_li.len() == n
            && self.p_al.len() == n
            && self.al_active.len() == n
            && self.soc_li.len() == n + 1
            && self.soc_al.len() == n + 1
            && self.h2_volume.len() == n + 1
    }

    /// First step at which the Al-air mode is active.
    pub fn activation_step(&self) -> Option<usize> {
        self.al_active.iter().position(|a| *a)
    }
}

/// Total powertrain mass, kg.
pub fn powertrain_weight(s: &Sizing, c: &CoefficientSet) -> f64 {
    c.c_h_wt * s.v_h + c.c_fc_wt * s.e_fc + c.c_li_wt * s.e_li + c.c_al_wt * s.e_al
}

/// Fuel-cell energy obtainable from a full tank of `v_h` litres, kWh.
pub fn hydrogen_energy_available(v_h: f64, c: &CoefficientSet) -> f64 {
    v_h * c.h_mass * c.h_lhv * c.eta_fc
}

/// Largest allowed change of fuel-cell output between consecutive steps, kW.
///
/// `E_fc` is read numerically as a power scale, so the limit is
/// `ramp_fraction * e_fc` kW per step regardless of the step length.
pub fn fc_ramp_limit(e_fc: f64, c: &CoefficientSet) -> f64 {
    c.ramp_fraction * e_fc
}
