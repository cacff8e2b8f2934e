//! Check a schedule with the independent replay, then break it on purpose.
//!
//! Run with `cargo run --release --example verify_schedule`.

use powertrain_opt::profile::{synthesize_profile, SynthesisParams};
use powertrain_opt::scenario::{run_experiment_2, verify_schedule, ExperimentConfig, VerifyOptions};
use powertrain_opt::types::CoefficientSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = synthesize_profile(&SynthesisParams::default())?;
    let c = CoefficientSet::default();
    let r = run_experiment_2(&profile, &c, &ExperimentConfig::default())?;
    let opts = VerifyOptions {
        initial_h2_fill: Some(r.spec.initial_h2_fill),
        ..VerifyOptions::default()
    };

    let clean = verify_schedule(&r.sizing, &r.schedule, &r.profile, &c, &opts)?;
    println!("solver schedule: pass {}", clean.pass);

    let mut broken = r.schedule.clone();
    let t = 40;
    broken.p_fc[t] += 5.0;
    let report = verify_schedule(&r.sizing, &broken, &r.profile, &c, &opts)?;
    println!("5 kW extra fuel cell at step {t}: pass {}", report.pass);
    for (name, value) in report.residuals.named() {
        if value > opts.tolerance {
            println!("  {name:<16} {value:.3e}");
        }
    }
    for v in &report.first_violations {
        println!("  first {} violation at step {:?} (t = {:?} s)", v.check, v.step, v.t_s);
    }
    Ok(())
}
