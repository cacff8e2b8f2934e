//! Fly the mission on a part-filled tank and watch the switch to Al-air.
//!
//! Run with `cargo run --release --example low_hydrogen`.

use powertrain_opt::profile::{synthesize_profile, SynthesisParams};
use powertrain_opt::scenario::{run_experiment_2, ExperimentConfig};
use powertrain_opt::types::CoefficientSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = synthesize_profile(&SynthesisParams::default())?;
    let c = CoefficientSet::default();
    let cfg = ExperimentConfig::default();
    let r = run_experiment_2(&profile, &c, &cfg)?;

    let reserve = c.h2_reserve_fraction * r.sizing.v_h;
    println!(
        "tank {:.0} L at {:.0} %, reserve {:.1} L, {} nodes",
        r.sizing.v_h,
        cfg.low_h2_fill * 100.0,
        reserve,
        r.nodes
    );
    let Some(t0) = r.stats.activation_step else {
        println!("Al-air never needed");
        return Ok(());
    };
    println!("Al-air takes over at step {t0} ({:.0} min)", t0 as f64 * profile.dt * 60.0);
    let s = &r.schedule;
    for t in t0.saturating_sub(3)..(t0 + 4).min(s.steps()) {
        println!(
            "t={t:>3} h2 {:>6.2} L  fc {:>6.1}  li {:>6.1}  al {:>6.1} kW  soc_al {:.3}",
            s.h2_volume[t], s.p_fc[t], s.p_li[t], s.p_al[t], s.soc_al[t]
        );
    }
    println!("Al-air energy {:.2} kWh, verified {}", r.stats.al_energy_kwh, r.report.pass);
    Ok(())
}
