//! Deterministic LP / MIP engine.
//!
//! [`solve_lp`] runs a bounded-variable primal simplex on the continuous
//! relaxation; [`solve_mip`] adds best-bound branch-and-bound over the
//! binary variables. Both apply a light presolve (fixed variables and empty
//! rows) and report residuals against the original problem.

mod bnb;
mod lu;
mod simplex;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::lp::{LpProblem, Relation};

use simplex::{LpStatus, Simplex, StdForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PivotRule {
    /// Smallest-index entering and leaving choice throughout.
    Bland,
    /// Largest reduced cost, switching to Bland after a run of degenerate pivots.
    DantzigBland,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub int_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub mip_gap: f64,
    pub max_iters: usize,
    pub max_nodes: usize,
    pub pivot_rule: PivotRule,
    /// Degenerate pivots tolerated before falling back to Bland's rule.
    pub stall_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            int_tol: 1e-6,
            mip_gap: 1e-6,
            max_iters: 200_000,
            max_nodes: 20_000,
            pivot_rule: PivotRule::DantzigBland,
            stall_threshold: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), LpError> {
        let tols = [self.feas_tol, self.opt_tol, self.int_tol, self.mip_gap];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(LpError::Config("tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.max_nodes == 0 || self.stall_threshold == 0 {
            return Err(LpError::Config("limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipSolution {
    pub status: Status,
    /// Objective of `values`; NaN when no point is available.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Violation of each original row by `values`.
    pub residuals: Vec<f64>,
    /// LP: Lagrangian bound from the reduced costs. MIP: best open-node bound.
    pub bound: Option<f64>,
    pub nodes: usize,
    pub iterations: usize,
    /// Entering variable of each simplex pivot (LP solves only).
    #[serde(skip)]
    pub pivots: Vec<usize>,
}

impl MipSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    fn without_point(status: Status, nodes: usize, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            residuals: Vec::new(),
            bound: None,
            nodes,
            iterations,
            pivots: Vec::new(),
        }
    }
}

/// Fixed-variable and empty-row elimination.
pub(crate) struct Presolved {
    pub sf: StdForm,
    /// Reduced variable -> original index.
    pub var_map: Vec<usize>,
    /// Values of eliminated variables (NaN for kept ones).
    pub fixed: Vec<f64>,
    pub offset: f64,
    /// Integer variables in reduced indexing.
    pub integers: Vec<usize>,
}

impl Presolved {
    pub(crate) fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut x = self.fixed.clone();
        for (k, &j) in self.var_map.iter().enumerate() {
            x[j] = reduced[k];
        }
        x
    }
}

/// Returns `None` when an eliminated row is violated.
pub(crate) fn presolve(p: &LpProblem, cfg: &SolverConfig) -> Option<Presolved> {
    let n = p.num_vars();
    let mut fixed = vec![f64::NAN; n];
    let mut new_index = vec![usize::MAX; n];
    let mut var_map = Vec::new();
    let mut offset = p.objective_offset;
    for j in 0..n {
        if p.lower[j] == p.upper[j] {
            fixed[j] = p.lower[j];
            offset += p.objective[j] * p.lower[j];
        } else {
            new_index[j] = var_map.len();
            var_map.push(j);
        }
    }
    let nk = var_map.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nk];
    let mut row_lo = Vec::new();
    let mut row_up = Vec::new();
    for row in &p.constraints {
        let mut rhs = row.rhs;
        let mut kept = Vec::new();
        for &(j, a) in &row.coeffs {
            if new_index[j] == usize::MAX {
                rhs -= a * fixed[j];
            } else {
                kept.push((new_index[j], a));
            }
        }
        if kept.is_empty() {
            let ok = match row.relation {
                Relation::Le => 0.0 <= rhs + cfg.feas_tol,
                Relation::Ge => 0.0 >= rhs - cfg.feas_tol,
                Relation::Eq => rhs.abs() <= cfg.feas_tol,
            };
            if !ok {
                return None;
            }
            continue;
        }
        let i = row_lo.len();
        for (k, a) in kept {
            cols[k].push((i, a));
        }
        let (l, u) = match row.relation {
            Relation::Le => (f64::NEG_INFINITY, rhs),
            Relation::Ge => (rhs, f64::INFINITY),
            Relation::Eq => (rhs, rhs),
        };
        row_lo.push(l);
        row_up.push(u);
    }
    let m = row_lo.len();
    let mut cost: Vec<f64> = var_map.iter().map(|&j| p.objective[j]).collect();
    cost.extend(std::iter::repeat(0.0).take(m));
    let mut lo: Vec<f64> = var_map.iter().map(|&j| p.lower[j]).collect();
    let mut up: Vec<f64> = var_map.iter().map(|&j| p.upper[j]).collect();
    lo.extend(row_lo);
    up.extend(row_up);
    let integers = p
        .integers
        .iter()
        .filter(|&&j| new_index[j] != usize::MAX)
        .map(|&j| new_index[j])
        .collect();
    Some(Presolved {
        sf: StdForm {
            m,
            n: nk,
            cols,
            cost,
            lo,
            up,
        },
        var_map,
        fixed,
        offset,
        integers,
    })
}

/// Basic variables can sit a few ulps outside a bound they touch; snap them.
const SNAP_TOL: f64 = 1e-9;

fn finish(p: &LpProblem, status: Status, mut x: Vec<f64>, bound: Option<f64>, nodes: usize, iterations: usize) -> MipSolution {
    for (j, v) in x.iter_mut().enumerate() {
        if (*v - p.lower[j]).abs() <= SNAP_TOL {
            *v = p.lower[j];
        } else if (*v - p.upper[j]).abs() <= SNAP_TOL {
            *v = p.upper[j];
        }
    }
    let objective = p.objective_value(&x);
    let residuals = p.residuals(&x);
    MipSolution {
        status,
        objective,
        values: x,
        residuals,
        bound,
        nodes,
        iterations,
        pivots: Vec::new(),
    }
}

/// Solves the continuous relaxation (integrality marks are ignored).
pub fn solve_lp(p: &LpProblem, cfg: &SolverConfig) -> Result<MipSolution, LpError> {
    solve_lp_logged(p, cfg, None)
}

pub fn solve_lp_logged(
    p: &LpProblem,
    cfg: &SolverConfig,
    log: Option<&mut dyn Write>,
) -> Result<MipSolution, LpError> {
    p.validate()?;
    cfg.validate()?;
    let Some(pre) = presolve(p, cfg) else {
        return Ok(MipSolution::without_point(Status::Infeasible, 0, 0));
    };
    let mut spx = Simplex::new(&pre.sf, cfg, pre.sf.lo.clone(), pre.sf.up.clone());
    spx.record_trace(true);
    let status = spx.solve(log);
    let iterations = spx.iterations;
    let mut sol = match status {
        LpStatus::Optimal => {
            let x = pre.expand(&spx.x[..pre.sf.n]);
            let bound = spx.dual_bound() + pre.offset;
            finish(p, Status::Optimal, x, Some(bound), 0, iterations)
        }
        LpStatus::IterLimit => {
            let x = pre.expand(&spx.x[..pre.sf.n]);
            finish(p, Status::IterLimit, x, None, 0, iterations)
        }
        LpStatus::Infeasible => MipSolution::without_point(Status::Infeasible, 0, iterations),
        LpStatus::Unbounded => MipSolution::without_point(Status::Unbounded, 0, iterations),
    };
    sol.pivots = std::mem::take(&mut spx.trace);
    Ok(sol)
}

/// Best-bound branch-and-bound over the binary variables.
pub fn solve_mip(p: &LpProblem, cfg: &SolverConfig) -> Result<MipSolution, LpError> {
    solve_mip_logged(p, cfg, None)
}

/// As [`solve_mip`], writing one `key=value` line per node to `log`.
pub fn solve_mip_logged(
    p: &LpProblem,
    cfg: &SolverConfig,
    log: Option<&mut dyn Write>,
) -> Result<MipSolution, LpError> {
    p.validate()?;
    cfg.validate()?;
    if p.integers.is_empty() {
        return solve_lp_logged(p, cfg, log);
    }
    let Some(pre) = presolve(p, cfg) else {
        return Ok(MipSolution::without_point(Status::Infeasible, 0, 0));
    };
    for &j in &p.integers {
        if p.lower[j] == p.upper[j] && p.lower[j] != 0.0 && p.lower[j] != 1.0 {
            return Ok(MipSolution::without_point(Status::Infeasible, 0, 0));
        }
    }
    let out = bnb::branch_and_bound(&pre, cfg, log);
    Ok(match out.incumbent {
        Some(x) => {
            let x = pre.expand(&x);
            let mut sol = finish(p, out.status, x, out.bound, out.nodes, out.iterations);
            for &j in &p.integers {
                sol.values[j] = sol.values[j].round();
            }
            sol.residuals = p.residuals(&sol.values);
            sol
        }
        None => MipSolution::without_point(out.status, out.nodes, out.iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn single_lower_bound_row() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 1.0, 0.0, f64::INFINITY);
        p.add_constraint("r", [(x, 1.0)], Relation::Ge, 5.0);
        let s = solve_lp(&p, &cfg()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.values[0] - 5.0).abs() < 1e-9);
        assert!((s.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_box_lp() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", -1.0, 0.0, 1.0);
        let y = p.add_var("y", -1.0, 0.0, 1.0);
        p.add_constraint("r", [(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, &cfg()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!(s.max_residual() <= 1e-7);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 1.0, 0.0, 1.0);
        p.add_constraint("r", [(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve_lp(&p, &cfg()).unwrap().status, Status::Infeasible);

        let mut p = LpProblem::new();
        let x = p.add_var("x", -1.0, 0.0, f64::INFINITY);
        let y = p.add_var("y", 0.0, 0.0, f64::INFINITY);
        p.add_constraint("r", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p, &cfg()).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min |x - 3| via x - 3 = p - q, p,q >= 0
        let mut p = LpProblem::new();
        let x = p.add_var("x", 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let a = p.add_var("p", 1.0, 0.0, f64::INFINITY);
        let b = p.add_var("q", 1.0, 0.0, f64::INFINITY);
        p.add_constraint("r", [(x, 1.0), (a, -1.0), (b, 1.0)], Relation::Eq, 3.0);
        p.add_constraint("s", [(x, 1.0)], Relation::Le, 10.0);
        let s = solve_lp(&p, &cfg()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(s.objective.abs() < 1e-9);
    }

    #[test]
    fn presolve_removes_fixed_and_checks_empty_rows() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 2.0, 4.0, 4.0);
        let y = p.add_var("y", 1.0, 0.0, 10.0);
        p.add_constraint("a", [(x, 1.0), (y, 1.0)], Relation::Ge, 6.0);
        p.add_constraint("b", [(x, 1.0)], Relation::Le, 5.0);
        let s = solve_lp(&p, &cfg()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 10.0).abs() < 1e-9);
        p.constraints[1].rhs = 3.0;
        assert_eq!(solve_lp(&p, &cfg()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn lp_reports_iteration_limit() {
        let mut p = LpProblem::new();
        let vars: Vec<usize> = (0..6).map(|i| p.add_var(format!("x{i}"), -1.0, 0.0, f64::INFINITY)).collect();
        for i in 0..6 {
            p.add_constraint(format!("r{i}"), vars.iter().map(|&j| (j, if i == j { 2.0 } else { 1.0 })), Relation::Le, 10.0);
        }
        let c = SolverConfig {
            max_iters: 1,
            ..cfg()
        };
        assert_eq!(solve_lp(&p, &c).unwrap().status, Status::IterLimit);
    }

    #[test]
    fn mip_without_integers_matches_lp() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", -1.0, 0.0, 3.5);
        let y = p.add_var("y", -2.0, 0.0, 1.5);
        p.add_constraint("r", [(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        let a = solve_lp(&p, &cfg()).unwrap();
        let b = solve_mip(&p, &cfg()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn small_knapsack_mip() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4 (binary)
        let mut p = LpProblem::new();
        let a = p.add_binary("a", -5.0);
        let b = p.add_binary("b", -4.0);
        let c = p.add_binary("c", -3.0);
        p.add_constraint("cap", [(a, 2.0), (b, 3.0), (c, 1.0)], Relation::Le, 4.0);
        let s = solve_mip(&p, &cfg()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 8.0).abs() < 1e-9);
        assert_eq!(s.values, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn infeasible_mip() {
        let mut p = LpProblem::new();
        let a = p.add_binary("a", 1.0);
        let b = p.add_binary("b", 1.0);
        p.add_constraint("r", [(a, 1.0), (b, 1.0)], Relation::Eq, 1.5);
        assert_eq!(solve_mip(&p, &cfg()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn rejects_malformed_problems() {
        let mut p = LpProblem::new();
        p.add_var("x", 1.0, 0.0, 1.0);
        p.add_constraint("r", [(3, 1.0)], Relation::Le, 1.0);
        assert!(solve_lp(&p, &cfg()).is_err());
        let bad = SolverConfig {
            feas_tol: 0.0,
            ..cfg()
        };
        assert!(solve_lp(&LpProblem::new(), &bad).is_err());
    }
}
