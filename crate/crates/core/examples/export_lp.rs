//! Build a small scenario model and print it in LP file format.
//!
//! Run with `cargo run --example export_lp`.

use powertrain_opt::model::{build_milp, ConstraintGroup, ScenarioSpec};
use powertrain_opt::types::{CoefficientSet, FlightProfile, Phase, Sizing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = FlightProfile::new("demo", 1.0 / 60.0, vec![80.0, 120.0, 60.0], vec![Phase::Cruise; 3])?;
    let spec = ScenarioSpec::low_hydrogen(Sizing::new(60.0, 90.0, 40.0, 80.0), 0.3);
    let m = build_milp(&profile, &CoefficientSet::default(), &spec)?;
    for g in ConstraintGroup::ALL {
        eprintln!("{:>3} {:<12} {} rows", g.label(), format!("{g:?}"), m.rows_in(g));
    }
    print!("{}", m.problem.to_lp_string());
    Ok(())
}
