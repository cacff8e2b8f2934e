mod common;

use common::{dense_lp, enumerate_binaries, flat_profile, random_bounded_lp, rel_diff, Oracle};
use powertrain_opt::lp::{LpProblem, Relation};
use powertrain_opt::model::{build_milp, ScenarioSpec};
use powertrain_opt::solver::{solve_lp, solve_mip, PivotRule, SolverConfig, Status};
use powertrain_opt::types::{CoefficientSet, FlightProfile, Phase, Sizing};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn oracle_agrees_on_textbook_lp() {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    let mut p = LpProblem::new();
    let x = p.add_var("x", -3.0, 0.0, f64::INFINITY);
    let y = p.add_var("y", -5.0, 0.0, f64::INFINITY);
    p.add_constraint("a", [(x, 1.0)], Relation::Le, 4.0);
    p.add_constraint("b", [(y, 2.0)], Relation::Le, 12.0);
    p.add_constraint("c", [(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
    let Oracle::Optimal { objective, x: pt } = dense_lp(&p) else {
        panic!("oracle failed");
    };
    assert!((objective + 36.0).abs() < 1e-9);
    assert!((pt[0] - 2.0).abs() < 1e-9 && (pt[1] - 6.0).abs() < 1e-9);
    let s = solve_lp(&p, &cfg()).unwrap();
    assert!((s.objective + 36.0).abs() < 1e-9);
}

#[test]
fn random_lps_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.gen_range(1..=20);
        let m = rng.gen_range(0..=15);
        let p = random_bounded_lp(&mut rng, n, m);
        let s = solve_lp(&p, &cfg()).unwrap();
        let want = dense_lp(&p).objective().expect("constructed feasible");
        assert_eq!(s.status, Status::Optimal, "case {case}");
        assert!(rel_diff(s.objective, want) < 1e-6, "case {case}: {} vs {want}", s.objective);
    }
}

#[test]
fn infeasible_and_unbounded_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let mut p = random_bounded_lp(&mut rng, 6, 5);
        // x0 >= u0 + 1 cannot hold
        let u = p.upper[0];
        p.add_constraint("cut", [(0, 1.0)], Relation::Ge, u + 1.0);
        assert_eq!(dense_lp(&p), Oracle::Infeasible);
        assert_eq!(solve_lp(&p, &cfg()).unwrap().status, Status::Infeasible);
    }
    let mut p = LpProblem::new();
    let x = p.add_var("x", -1.0, 0.0, f64::INFINITY);
    let y = p.add_var("y", 0.0, f64::NEG_INFINITY, f64::INFINITY);
    p.add_constraint("r", [(x, 1.0), (y, -1.0)], Relation::Le, 3.0);
    assert_eq!(dense_lp(&p), Oracle::Unbounded);
    assert_eq!(solve_lp(&p, &cfg()).unwrap().status, Status::Unbounded);
}

#[test]
fn bland_only_rule_reaches_the_same_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let bland = SolverConfig {
        pivot_rule: PivotRule::Bland,
        ..cfg()
    };
    for _ in 0..40 {
        let p = random_bounded_lp(&mut rng, 12, 10);
        let a = solve_lp(&p, &cfg()).unwrap();
        let b = solve_lp(&p, &bland).unwrap();
        assert!(rel_diff(a.objective, b.objective) < 1e-7);
    }
}

#[test]
fn optimal_lps_satisfy_weak_duality_and_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let c = cfg();
    for _ in 0..60 {
        let p = random_bounded_lp(&mut rng, 15, 12);
        let s = solve_lp(&p, &c).unwrap();
        assert_eq!(s.status, Status::Optimal);
        let bound = s.bound.expect("optimal LP carries a dual bound");
        let scale = 1.0 + s.objective.abs();
        assert!(bound <= s.objective + c.feas_tol * scale * 10.0);
        assert!(s.objective - bound <= 1e-6 * scale, "gap {} ", s.objective - bound);
        let replay = p.residuals(&s.values);
        assert!(replay.iter().all(|r| *r <= c.feas_tol));
        assert_eq!(replay, s.residuals);
        assert!(p.max_bound_violation(&s.values) <= c.feas_tol);
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_bounded_lp(&mut rng, 20, 15);
    let a = solve_lp(&p, &cfg()).unwrap();
    let b = solve_lp(&p, &cfg()).unwrap();
    assert!(!a.pivots.is_empty());
    assert_eq!(a.pivots, b.pivots);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.values), bits(&b.values));

    let profile = flat_profile(&[80.0, 150.0, 90.0, 60.0]);
    let spec = ScenarioSpec::low_hydrogen(Sizing::new(60.0, 100.0, 30.0, 200.0), 0.5);
    let m = build_milp(&profile, &CoefficientSet::default(), &spec).unwrap();
    let a = solve_mip(&m.problem, &cfg()).unwrap();
    let b = solve_mip(&m.problem, &cfg()).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(bits(&a.values), bits(&b.values));
}

#[test]
fn mip_without_integers_equals_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let p = random_bounded_lp(&mut rng, 10, 8);
        let a = solve_lp(&p, &cfg()).unwrap();
        let b = solve_mip(&p, &cfg()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.values, b.values);
    }
}

/// Random mixed problem: continuous box variables plus binaries that
/// switch some of them on.
fn random_mip(rng: &mut ChaCha8Rng, nbin: usize) -> LpProblem {
    let mut p = random_bounded_lp(rng, 4 + nbin, 3 + nbin / 2);
    let cont = p.num_vars();
    for k in 0..nbin {
        let z = p.add_binary(format!("z{k}"), rng.gen_range(-5.0..5.0));
        let j = rng.gen_range(0..cont);
        // x_j <= l_j + w * z  couples a continuous variable to the switch
        let (l, u) = (p.lower[j], p.upper[j]);
        p.add_constraint(format!("sw{k}"), [(j, 1.0), (z, l - u)], Relation::Le, l);
        if rng.gen_bool(0.3) && k > 0 {
            p.add_constraint(format!("ord{k}"), [(z - 1, 1.0), (z, -1.0)], Relation::Le, 0.0);
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_and_bound_matches_enumeration(seed in any::<u64>(), nbin in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_mip(&mut rng, nbin);
        let c = SolverConfig::default();
        let s = solve_mip(&p, &c).unwrap();
        let lp = |q: &LpProblem| {
            let r = solve_lp(q, &c).unwrap();
            (r.status == Status::Optimal).then_some(r.objective)
        };
        match enumerate_binaries(&p, &lp) {
            Some(best) => {
                prop_assert_eq!(s.status, Status::Optimal);
                prop_assert!(rel_diff(s.objective, best) <= 1e-6, "{} vs {}", s.objective, best);
                for &j in &p.integers {
                    prop_assert!(s.values[j] == 0.0 || s.values[j] == 1.0);
                }
                prop_assert!(s.max_residual() <= c.feas_tol);
            }
            None => prop_assert_eq!(s.status, Status::Infeasible),
        }
    }

    #[test]
    fn small_mips_match_dense_enumeration(seed in any::<u64>(), nbin in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_mip(&mut rng, nbin);
        let s = solve_mip(&p, &SolverConfig::default()).unwrap();
        let best = enumerate_binaries(&p, &|q| dense_lp(q).objective());
        match best {
            Some(b) => prop_assert!(rel_diff(s.objective, b) <= 1e-6),
            None => prop_assert_eq!(s.status, Status::Infeasible),
        }
    }
}

#[test]
fn forced_trigger_activates_at_third_step() {
    // no Li-ion, so the fuel cell must carry steps 0 and 1 at 50 kW; that
    // drains 2 * 50 / 1.65 L from a 70 L start, leaving 9.4 L < 10 L at the
    // start of step 2
    let profile = FlightProfile::new("toy", 1.0, vec![50.0; 4], vec![Phase::Cruise; 4]).unwrap();
    let c = CoefficientSet::default();
    let spec = ScenarioSpec::low_hydrogen(Sizing::new(100.0, 100.0, 0.0, 200.0), 0.7);
    let m = build_milp(&profile, &c, &spec).unwrap();
    let s = solve_mip(&m.problem, &cfg()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    let z: Vec<f64> = (0..4).map(|t| s.values[m.layout.z(t)]).collect();
    assert_eq!(z, vec![0.0, 0.0, 1.0, 1.0]);

    let lp = |q: &LpProblem| dense_lp(q).objective();
    let best = enumerate_binaries(&m.problem, &lp).unwrap();
    assert!(rel_diff(s.objective, best) < 1e-6);
}

#[test]
fn demand_above_fc_and_battery_rate_is_infeasible() {
    let c = CoefficientSet::default();
    let profile = flat_profile(&[50.0, 200.0]);
    let spec = ScenarioSpec {
        fixed_sizing: Some(Sizing::new(100.0, 100.0, 10.0, 0.0)),
        ..ScenarioSpec::nominal()
    };
    let m = build_milp(&profile, &c, &spec).unwrap();
    assert_eq!(solve_mip(&m.problem, &cfg()).unwrap().status, Status::Infeasible);
    assert_eq!(dense_lp(&m.problem), Oracle::Infeasible);
}

#[test]
fn iteration_and_node_limits_are_reported() {
    let profile = flat_profile(&[80.0, 150.0, 90.0, 60.0, 70.0, 90.0]);
    let spec = ScenarioSpec::low_hydrogen(Sizing::new(40.0, 60.0, 30.0, 200.0), 0.6);
    let m = build_milp(&profile, &CoefficientSet::default(), &spec).unwrap();
    let tight = SolverConfig {
        max_iters: 2,
        ..cfg()
    };
    assert_eq!(solve_mip(&m.problem, &tight).unwrap().status, Status::IterLimit);
    let one = SolverConfig {
        max_nodes: 1,
        ..cfg()
    };
    let s = solve_mip(&m.problem, &one).unwrap();
    assert!(matches!(s.status, Status::NodeLimit | Status::Optimal));
}
