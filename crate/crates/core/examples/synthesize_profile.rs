//! Build the seeded synthetic mission and summarise it per phase.
//!
//! Run with `cargo run --example synthesize_profile`.

use std::collections::BTreeMap;

use powertrain_opt::profile::{default_go_around, synthesize_profile, SynthesisParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SynthesisParams::default();
    let profile = synthesize_profile(&params)?;
    println!(
        "{}: {} steps, peak {:.1} kW, energy {:.2} kWh",
        profile.name,
        profile.len(),
        profile.peak_kw(),
        profile.energy_kwh()
    );

    let mut by_phase: BTreeMap<_, (usize, f64)> = BTreeMap::new();
    for (d, ph) in profile.demand.iter().zip(&profile.phase) {
        let e = by_phase.entry(*ph).or_default();
        e.0 += 1;
        e.1 += d * profile.dt;
    }
    for (phase, (steps, kwh)) in by_phase {
        println!("{:>8} {steps:>4} steps {kwh:>8.2} kWh", phase.as_str());
    }

    let suffix = default_go_around();
    let extended = profile.extended(&suffix);
    println!("with go-around: {} steps, {:.2} kWh", extended.len(), extended.energy_kwh());
    Ok(())
}
