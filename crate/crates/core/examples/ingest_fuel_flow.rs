//! Convert a short fuel-flow recording into a one-minute power profile.
//!
//! Run with `cargo run --example ingest_fuel_flow`.

use powertrain_opt::io::{parse_fuel_flow_csv, profile_csv};
use powertrain_opt::profile::{default_efficiencies, fuel_flow_to_power, DEFAULT_DT_H, DEFAULT_SPECIFIC_ENERGY};

const RECORDING: &str = "\
t_s,fuel_flow_kg_per_h,phase
0,20,taxi
240,20,taxi
300,180,takeoff
420,140,climb
1200,95,cruise
3000,40,descent
3600,40,descent
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = parse_fuel_flow_csv(RECORDING)?;
    let profile = fuel_flow_to_power(&records, DEFAULT_SPECIFIC_ENERGY, &default_efficiencies(), DEFAULT_DT_H)?;
    println!(
        "{} steps, peak {:.1} kW, energy {:.1} kWh",
        profile.len(),
        profile.peak_kw(),
        profile.energy_kwh()
    );
    for line in profile_csv(&profile).lines().take(8) {
        println!("{line}");
    }
    Ok(())
}
