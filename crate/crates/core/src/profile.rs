//! Building flight power-demand profiles.
//!
//! Three routes are supported: converting recorded engine fuel flow into
//! shaft power, averaging several recorded profiles into a representative
//! curve, and synthesizing a parametric single-turboprop regional profile.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ProfileError;
use crate::types::{FlightProfile, Phase};

/// Default fuel specific energy for piston/turboprop fuels, kWh/kg.
pub const DEFAULT_SPECIFIC_ENERGY: f64 = 12.0;

/// Default timestep, hours (one minute).
pub const DEFAULT_DT_H: f64 = 1.0 / 60.0;

/// One sample of recorded engine fuel flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelFlowRecord {
    /// Elapsed time, hours.
    pub t: f64,
    /// Fuel mass rate, kg/h.
    pub fuel_flow: f64,
    pub phase: Phase,
}

/// Engine efficiency per flight phase.
pub type EfficiencyByPhase = BTreeMap<Phase, f64>;

/// 30 % for taxi, climb, cruise and descent; 19 % at takeoff.
pub fn default_efficiencies() -> EfficiencyByPhase {
    Phase::ALL
        .into_iter()
        .map(|p| (p, if p == Phase::Takeoff { 0.19 } else { 0.30 }))
        .collect()
}

/// Resample recorded fuel flow onto a uniform grid and convert it to shaft power.
///
/// The grid starts at the first record and includes every point up to the
/// last record. Fuel flow is linearly interpolated; each grid point takes the
/// phase of the latest record at or before it.
pub fn fuel_flow_to_power(
    records: &[FuelFlowRecord],
    specific_energy: f64,
    efficiency: &EfficiencyByPhase,
    dt: f64,
) -> Result<FlightProfile, ProfileError> {
    if records.is_empty() {
        return Err(ProfileError::EmptyInput);
    }
    if !(specific_energy.is_finite() && specific_energy > 0.0) {
        return Err(ProfileError::InvalidParameter(
            "specific energy must be positive".into(),
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ProfileError::InvalidParameter("dt must be positive".into()));
    }
    for (i, w) in records.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(ProfileError::NonMonotonicTime { index: i + 1 });
        }
    }
    for r in records {
        if !(r.fuel_flow.is_finite() && r.fuel_flow >= 0.0) {
            return Err(ProfileError::InvalidParameter(format!(
                "fuel flow must be non-negative, got {}",
                r.fuel_flow
            )));
        }
        if !efficiency.contains_key(&r.phase) {
            return Err(ProfileError::MissingEfficiency(r.phase));
        }
    }

    let t0 = records[0].t;
    let span = records[records.len() - 1].t - t0;
    let steps = (span / dt + 1e-9).floor() as usize + 1;

    let mut demand = Vec::with_capacity(steps);
    let mut phase = Vec::with_capacity(steps);
    let mut seg = 0usize;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        while seg + 1 < records.len() && records[seg + 1].t <= t {
            seg += 1;
        }
        let a = records[seg];
        let flow = match records.get(seg + 1) {
            Some(b) => {
                let w = (t - a.t) / (b.t - a.t);
                a.fuel_flow + w.clamp(0.0, 1.0) * (b.fuel_flow - a.fuel_flow)
            }
            None => a.fuel_flow,
        };
        demand.push(flow * specific_energy * efficiency[&a.phase]);
        phase.push(a.phase);
    }
    Ok(FlightProfile::new("ingested", dt, demand, phase)?)
}

/// Pointwise mean of several profiles sharing one timestep.
///
/// Shorter profiles are padded with their final value and phase. Phase labels
/// are decided by majority vote, ties going to the earlier phase.
pub fn average_profiles(profiles: &[FlightProfile]) -> Result<FlightProfile, ProfileError> {
    let first = profiles.first().ok_or(ProfileError::EmptyInput)?;
    for p in profiles {
        p.check()?;
        if (p.dt - first.dt).abs() > 1e-12 * first.dt.max(1.0) {
            return Err(ProfileError::MismatchedDt(first.dt, p.dt));
        }
    }
    let len = profiles.iter().map(FlightProfile::len).max().unwrap_or(0);
    let n = profiles.len() as f64;

    let mut demand = Vec::with_capacity(len);
    let mut phase = Vec::with_capacity(len);
    for t in 0..len {
        let mut sum = 0.0;
        let mut votes = [0usize; 5];
        for p in profiles {
            let i = t.min(p.len() - 1);
            sum += p.demand[i];
            votes[p.phase[i] as usize] += 1;
        }
        demand.push(sum / n);
        // max_by_key keeps the last maximum, so scan in reverse order
        let winner = Phase::ALL
            .into_iter()
            .rev()
            .max_by_key(|ph| votes[*ph as usize])
            .unwrap_or(Phase::Cruise);
        phase.push(winner);
    }
    let name = if profiles.len() == 1 {
        first.name.clone()
    } else {
        format!("average of {} profiles", profiles.len())
    };
    Ok(FlightProfile::new(name, first.dt, demand, phase)?)
}

/// Parameters of the synthetic regional-turboprop profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    /// Total flight time, hours.
    pub duration_h: f64,
    pub dt_h: f64,
    pub taxi_h: f64,
    pub takeoff_h: f64,
    pub climb_h: f64,
    pub cruise_h: f64,
    pub descent_h: f64,
    pub taxi_kw: f64,
    /// Demand at the end of the takeoff ramp.
    pub takeoff_peak_kw: f64,
    /// Demand at the start of climb; climb tapers linearly towards cruise.
    pub climb_kw: f64,
    pub cruise_kw: f64,
    pub descent_kw: f64,
    /// Half-width of the uniform cruise fluctuation, kW.
    pub fluctuation_kw: f64,
    pub seed: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        let min = 1.0 / 60.0;
        Self {
            duration_h: 130.0 * min,
            dt_h: DEFAULT_DT_H,
            taxi_h: 5.0 * min,
            takeoff_h: 3.0 * min,
            climb_h: 18.0 * min,
            cruise_h: 89.0 * min,
            descent_h: 15.0 * min,
            taxi_kw: 60.0,
            takeoff_peak_kw: 280.0,
            climb_kw: 260.0,
            cruise_kw: 210.0,
            descent_kw: 60.0,
            fluctuation_kw: 12.0,
            seed: 208,
        }
    }
}

impl SynthesisParams {
    fn phase_durations(&self) -> [(Phase, f64); 5] {
        [
            (Phase::Taxi, self.taxi_h),
            (Phase::Takeoff, self.takeoff_h),
            (Phase::Climb, self.climb_h),
            (Phase::Cruise, self.cruise_h),
            (Phase::Descent, self.descent_h),
        ]
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |m: &str| Err(ProfileError::InvalidDurations(m.to_string()));
        if !(self.dt_h.is_finite() && self.dt_h > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.duration_h.is_finite() && self.duration_h > 0.0) {
            return bad("duration must be positive");
        }
        let mut sum = 0.0;
        for (ph, d) in self.phase_durations() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ProfileError::InvalidDurations(format!(
                    "{ph} duration must be non-negative"
                )));
            }
            sum += d;
        }
        if (sum - self.duration_h).abs() > 1e-9 * self.duration_h.max(1.0) {
            return Err(ProfileError::InvalidDurations(format!(
                "phase durations sum to {sum} h but total duration is {} h",
                self.duration_h
            )));
        }
        if (self.duration_h / self.dt_h).round() < 1.0 {
            return bad("duration is shorter than one step");
        }
        for (name, v) in [
            ("taxi_kw", self.taxi_kw),
            ("takeoff_peak_kw", self.takeoff_peak_kw),
            ("climb_kw", self.climb_kw),
            ("cruise_kw", self.cruise_kw),
            ("descent_kw", self.descent_kw),
            ("fluctuation_kw", self.fluctuation_kw),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ProfileError::InvalidParameter(format!(
                    "{name} must be non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise taxi / takeoff ramp / climb taper / noisy cruise / descent profile.
pub fn synthesize_profile(params: &SynthesisParams) -> Result<FlightProfile, ProfileError> {
    params.validate()?;
    let steps = (params.duration_h / params.dt_h).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // phase of each step decided by its midpoint
    let bounds: Vec<(Phase, f64)> = params
        .phase_durations()
        .iter()
        .scan(0.0, |acc, &(ph, d)| {
            *acc += d;
            Some((ph, *acc))
        })
        .collect();
    let phase: Vec<Phase> = (0..steps)
        .map(|k| {
            let mid = (k as f64 + 0.5) * params.dt_h;
            bounds
                .iter()
                .find(|(_, end)| mid < *end)
                .map(|(ph, _)| *ph)
                .unwrap_or(Phase::Descent)
        })
        .collect();

    let mut demand = Vec::with_capacity(steps);
    let mut k = 0;
    while k < steps {
        let ph = phase[k];
        let n = phase[k..].iter().take_while(|p| **p == ph).count();
        for i in 0..n {
            let d = match ph {
                Phase::Taxi => params.taxi_kw,
                Phase::Takeoff => {
                    params.taxi_kw
                        + (params.takeoff_peak_kw - params.taxi_kw) * (i + 1) as f64 / n as f64
                }
                Phase::Climb => {
                    params.climb_kw + (params.cruise_kw - params.climb_kw) * i as f64 / n as f64
                }
                Phase::Cruise => {
                    let u: f64 = rng.gen_range(-1.0..=1.0);
                    (params.cruise_kw + u * params.fluctuation_kw).max(0.0)
                }
                Phase::Descent => params.descent_kw,
            };
            demand.push(d);
        }
        k += n;
    }
    Ok(FlightProfile::new(
        format!("synthetic-seed{}", params.seed),
        params.dt_h,
        demand,
        phase,
    )?)
}

/// Default go-around segment: climb at 80 % of takeoff peak, then a second
/// descent. Durations in minutes are rounded to whole steps.
pub fn go_around_suffix(params: &SynthesisParams, climb_min: f64, descent_min: f64) -> Vec<(f64, Phase)> {
    let steps = |min: f64| (min / 60.0 / params.dt_h).round() as usize;
    let climb = 0.8 * params.takeoff_peak_kw;
    std::iter::repeat((climb, Phase::Climb))
        .take(steps(climb_min))
        .chain(std::iter::repeat((params.descent_kw, Phase::Descent)).take(steps(descent_min)))
        .collect()
}

/// Five-minute climb plus ten-minute descent on the default parameters.
pub fn default_go_around() -> Vec<(f64, Phase)> {
    go_around_suffix(&SynthesisParams::default(), 5.0, 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t_min: f64, flow: f64, phase: Phase) -> FuelFlowRecord {
        FuelFlowRecord {
            t: t_min / 60.0,
            fuel_flow: flow,
            phase,
        }
    }

    #[test]
    fn constant_cruise_flow() {
        let recs = [rec(0.0, 100.0, Phase::Cruise), rec(10.0, 100.0, Phase::Cruise)];
        let p = fuel_flow_to_power(&recs, 12.0, &default_efficiencies(), DEFAULT_DT_H).unwrap();
        assert_eq!(p.len(), 11);
        for d in &p.demand {
            assert!((d - 360.0).abs() < 1e-9);
        }
    }

    #[test]
    fn takeoff_efficiency_is_lower() {
        let recs = [rec(0.0, 100.0, Phase::Takeoff), rec(2.0, 100.0, Phase::Takeoff)];
        let p = fuel_flow_to_power(&recs, 12.0, &default_efficiencies(), DEFAULT_DT_H).unwrap();
        assert!(p.demand.iter().all(|d| (d - 228.0).abs() < 1e-9));
    }

    #[test]
    fn zero_flow_gives_zero_power() {
        let recs = [rec(0.0, 0.0, Phase::Taxi), rec(3.0, 0.0, Phase::Descent)];
        let p = fuel_flow_to_power(&recs, 12.0, &default_efficiencies(), DEFAULT_DT_H).unwrap();
        assert!(p.demand.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn interpolates_between_records() {
        let recs = [rec(0.0, 0.0, Phase::Climb), rec(2.0, 200.0, Phase::Climb)];
        let p = fuel_flow_to_power(&recs, 10.0, &default_efficiencies(), DEFAULT_DT_H).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p.demand[1] - 100.0 * 10.0 * 0.30).abs() < 1e-9);
    }

    #[test]
    fn ingestion_errors() {
        let eff = default_efficiencies();
        assert_eq!(
            fuel_flow_to_power(&[], 12.0, &eff, DEFAULT_DT_H).unwrap_err(),
            ProfileError::EmptyInput
        );
        let recs = [rec(1.0, 1.0, Phase::Taxi), rec(1.0, 1.0, Phase::Taxi)];
        assert_eq!(
            fuel_flow_to_power(&recs, 12.0, &eff, DEFAULT_DT_H).unwrap_err(),
            ProfileError::NonMonotonicTime { index: 1 }
        );
        let mut partial = eff.clone();
        partial.remove(&Phase::Descent);
        let recs = [rec(0.0, 1.0, Phase::Taxi), rec(1.0, 1.0, Phase::Descent)];
        assert_eq!(
            fuel_flow_to_power(&recs, 12.0, &partial, DEFAULT_DT_H).unwrap_err(),
            ProfileError::MissingEfficiency(Phase::Descent)
        );
    }

    fn flat(name: &str, values: &[f64]) -> FlightProfile {
        FlightProfile::new(name, 0.1, values.to_vec(), vec![Phase::Cruise; values.len()]).unwrap()
    }

    #[test]
    fn averaging_examples() {
        let a = flat("a", &[100.0, 100.0]);
        assert_eq!(average_profiles(&[a.clone()]).unwrap(), a);

        let avg = average_profiles(&[flat("x", &[200.0; 4]), flat("y", &[400.0; 4])]).unwrap();
        assert!(avg.demand.iter().all(|d| *d == 300.0));

        let avg = average_profiles(&[a, flat("b", &[100.0, 300.0])]).unwrap();
        assert_eq!(avg.demand, vec![100.0, 200.0]);
    }

    #[test]
    fn averaging_pads_and_votes() {
        let a = FlightProfile::new("a", 0.1, vec![10.0, 20.0, 30.0], vec![Phase::Taxi, Phase::Climb, Phase::Descent])
            .unwrap();
        let b = FlightProfile::new("b", 0.1, vec![30.0], vec![Phase::Takeoff]).unwrap();
        let avg = average_profiles(&[a, b]).unwrap();
        assert_eq!(avg.demand, vec![20.0, 25.0, 30.0]);
        // 1-1 ties go to the earlier phase
        assert_eq!(avg.phase, vec![Phase::Taxi, Phase::Takeoff, Phase::Takeoff]);
    }

    #[test]
    fn averaging_errors() {
        assert_eq!(average_profiles(&[]).unwrap_err(), ProfileError::EmptyInput);
        let a = flat("a", &[1.0]);
        let mut b = flat("b", &[1.0]);
        b.dt = 0.2;
        assert!(matches!(
            average_profiles(&[a, b]).unwrap_err(),
            ProfileError::MismatchedDt(..)
        ));
    }

    #[test]
    fn synthesis_default_shape() {
        let params = SynthesisParams::default();
        let p = synthesize_profile(&params).unwrap();
        assert_eq!(p.len(), 130);
        let peak_idx = p
            .demand
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(p.phase[peak_idx], Phase::Takeoff);
        let count = |ph| p.phase.iter().filter(|x| **x == ph).count();
        assert_eq!(count(Phase::Taxi), 5);
        assert_eq!(count(Phase::Takeoff), 3);
        assert_eq!(count(Phase::Climb), 18);
        assert_eq!(count(Phase::Cruise), 89);
        assert_eq!(count(Phase::Descent), 15);
    }

    #[test]
    fn synthesis_is_deterministic_and_noise_free_at_zero_amplitude() {
        let params = SynthesisParams::default();
        assert_eq!(synthesize_profile(&params).unwrap(), synthesize_profile(&params).unwrap());

        let quiet = SynthesisParams {
            fluctuation_kw: 0.0,
            ..SynthesisParams::default()
        };
        let p = synthesize_profile(&quiet).unwrap();
        for (d, ph) in p.demand.iter().zip(&p.phase) {
            if *ph == Phase::Cruise {
                assert_eq!(*d, quiet.cruise_kw);
            }
        }
    }

    #[test]
    fn synthesis_rejects_bad_durations() {
        let p = SynthesisParams {
            cruise_h: 0.5,
            ..SynthesisParams::default()
        };
        assert!(matches!(synthesize_profile(&p), Err(ProfileError::InvalidDurations(_))));
    }

    #[test]
    fn go_around_default_length() {
        let s = default_go_around();
        assert_eq!(s.len(), 15);
        assert_eq!(s[0], (224.0, Phase::Climb));
        assert_eq!(s[14], (60.0, Phase::Descent));
    }
}
