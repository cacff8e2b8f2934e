//! Size the powertrain for the nominal mission and show how the fuel cell
//! and Li-ion battery share the load.
//!
//! Run with `cargo run --release --example size_nominal`.

use powertrain_opt::profile::{synthesize_profile, SynthesisParams};
use powertrain_opt::scenario::{run_experiment_1, ExperimentConfig};
use powertrain_opt::types::{CoefficientSet, Phase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = synthesize_profile(&SynthesisParams::default())?;
    let c = CoefficientSet::default();
    let r = run_experiment_1(&profile, &c, &ExperimentConfig::default())?;

    let s = &r.sizing;
    println!(
        "v_h {:.1} L  e_fc {:.1} kWh  e_li {:.1} kWh  e_al {:.1} kWh  weight {:.1} kg",
        s.v_h, s.e_fc, s.e_li, s.e_al, r.stats.weight_kg
    );
    println!("verified: {} (max residual {:.2e})", r.report.pass, r.report.residuals.max());

    for phase in Phase::ALL {
        let steps: Vec<usize> = (0..profile.len()).filter(|&t| profile.phase[t] == phase).collect();
        if steps.is_empty() {
            continue;
        }
        let mean = |v: &[f64]| steps.iter().map(|&t| v[t]).sum::<f64>() / steps.len() as f64;
        println!(
            "{:>8}  fc {:>7.1} kW  li {:>7.1} kW",
            phase.as_str(),
            mean(&r.schedule.p_fc),
            mean(&r.schedule.p_li)
        );
    }
    Ok(())
}
