//! Use the simplex and branch-and-bound directly on a hand-written model.
//!
//! Run with `cargo run --example solve_lp`.

use powertrain_opt::lp::{LpProblem, Relation};
use powertrain_opt::solver::{solve_lp, solve_mip, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // pick generators to cover 150 kW at least cost; a unit runs only when
    // committed and has a fixed cost when it does
    let mut p = LpProblem::new();
    let units = [("a", 2.0, 100.0, 30.0), ("b", 3.0, 80.0, 5.0), ("c", 1.5, 60.0, 60.0)];
    let mut cover = Vec::new();
    for (name, cost, cap, fixed) in units {
        let x = p.add_var(format!("p_{name}"), cost, 0.0, cap);
        let u = p.add_binary(format!("on_{name}"), fixed);
        p.add_constraint(format!("cap_{name}"), [(x, 1.0), (u, -cap)], Relation::Le, 0.0);
        cover.push((x, 1.0));
    }
    p.add_constraint("demand", cover, Relation::Ge, 150.0);

    let cfg = SolverConfig::default();
    let relaxed = solve_lp(&p, &cfg)?;
    let exact = solve_mip(&p, &cfg)?;
    println!("relaxation {:.2}, integer {:.2} after {} nodes", relaxed.objective, exact.objective, exact.nodes);
    for (j, v) in exact.values.iter().enumerate() {
        println!("  {:<5} {v:.1}", p.names[j]);
    }
    Ok(())
}
