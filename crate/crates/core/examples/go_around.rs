//! Append a go-around to the low-hydrogen mission and size nothing new:
//! the fixed emergency sizing has to absorb the extra climb.
//!
//! Run with `cargo run --release --example go_around`.

use powertrain_opt::profile::{go_around_suffix, synthesize_profile, SynthesisParams};
use powertrain_opt::scenario::{run_experiment_3, ExperimentConfig};
use powertrain_opt::types::CoefficientSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SynthesisParams::default();
    let profile = synthesize_profile(&params)?;
    let c = CoefficientSet::default();
    for climb_min in [3.0, 5.0, 8.0] {
        let cfg = ExperimentConfig {
            go_around: go_around_suffix(&params, climb_min, 10.0),
            ..ExperimentConfig::default()
        };
        match run_experiment_3(&profile, &c, &cfg) {
            Ok(r) => println!(
                "climb {climb_min} min: activation {:?}, Al-air {:.2} kWh, final h2 {:.1} L, verified {}",
                r.stats.activation_step, r.stats.al_energy_kwh, r.stats.final_h2_l, r.report.pass
            ),
            Err(e) => println!("climb {climb_min} min: {e}"),
        }
    }
    Ok(())
}
