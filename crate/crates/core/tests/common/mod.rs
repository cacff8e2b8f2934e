//! Reference implementations used only as test oracles.
//!
//! The dense tableau simplex below shares nothing with the library solver:
//! it converts to equality standard form with non-negative variables, runs
//! a textbook two-phase method with Bland's rule throughout, and keeps the
//! whole tableau in memory.
#![allow(dead_code)]

use powertrain_opt::lp::{LpProblem, Relation};
use powertrain_opt::types::{FlightProfile, Phase};
use rand::Rng;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl Oracle {
    pub fn objective(&self) -> Option<f64> {
        match self {
            Oracle::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

/// How an original variable is rebuilt from the standard-form columns.
enum Recover {
    Shift { col: usize, base: f64 },
    Mirror { col: usize, base: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// m rows of (n columns + rhs).
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let piv = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, p) in obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for cost vector `cost` under the current basis.
    fn reduced(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj: Vec<f64> = cost.to_vec();
        obj.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, a) in obj.iter_mut().zip(&self.a[i]) {
                    *v -= cb * a;
                }
            }
        }
        obj
    }

    /// Bland's rule until optimal; false when unbounded.
    fn run(&mut self, obj: &mut [f64], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let Some(c) = (0..self.n).find(|&j| allowed(j) && obj[j] < -EPS) else {
                return true;
            };
            // minimum ratio, ties to the smallest basic index
            let mut best: Option<(f64, usize)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[self.n] / row[c];
                    let better = match best {
                        None => true,
                        Some((br, bi)) => {
                            ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        best = Some((ratio, i));
                    }
                }
            }
            let Some((_, r)) = best else {
                return false;
            };
            self.pivot(r, c, obj);
        }
    }
}

/// Two-phase dense tableau simplex with Bland's rule.
pub fn dense_lp(p: &LpProblem) -> Oracle {
    let nv = p.num_vars();
    let mut recover = Vec::with_capacity(nv);
    let mut ncols = 0usize;
    // extra rows y <= u - l for doubly bounded variables
    let mut box_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..nv {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l.is_finite() {
            recover.push(Recover::Shift { col: ncols, base: l });
            if u.is_finite() {
                box_rows.push((ncols, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            recover.push(Recover::Mirror { col: ncols, base: u });
            ncols += 1;
        } else {
            recover.push(Recover::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    // rows over structural columns: (coeffs, relation, rhs)
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for con in &p.constraints {
        let mut coef = vec![0.0; ncols];
        let mut rhs = con.rhs;
        for &(j, a) in &con.coeffs {
            match recover[j] {
                Recover::Shift { col, base } => {
                    coef[col] += a;
                    rhs -= a * base;
                }
                Recover::Mirror { col, base } => {
                    coef[col] -= a;
                    rhs -= a * base;
                }
                Recover::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        rows.push((coef, con.relation, rhs));
    }
    for &(col, width) in &box_rows {
        let mut coef = vec![0.0; ncols];
        coef[col] = 1.0;
        rows.push((coef, Relation::Le, width));
    }
    let mut cost = vec![0.0; ncols];
    for j in 0..nv {
        let c = p.objective[j];
        match recover[j] {
            Recover::Shift { col, .. } => cost[col] += c,
            Recover::Mirror { col, .. } => cost[col] -= c,
            Recover::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art0 = ncols + nslack;
    let n = art0 + m;
    let mut a = vec![vec![0.0; n + 1]; m];
    let mut s = ncols;
    for (i, (coef, rel, rhs)) in rows.iter().enumerate() {
        a[i][..ncols].copy_from_slice(coef);
        match rel {
            Relation::Le => {
                a[i][s] = 1.0;
                s += 1;
            }
            Relation::Ge => {
                a[i][s] = -1.0;
                s += 1;
            }
            Relation::Eq => {}
        }
        a[i][n] = *rhs;
        if a[i][n] < 0.0 {
            for v in a[i].iter_mut() {
                *v = -*v;
            }
        }
        a[i][art0 + i] = 1.0;
    }
    let mut t = Tableau {
        a,
        basis: (art0..n).collect(),
        n,
    };

    let mut phase1 = vec![0.0; n];
    for c in phase1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    let mut obj = t.reduced(&phase1);
    t.run(&mut obj, &|_| true);
    let infeas: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art0)
        .map(|(i, _)| t.a[i][n])
        .sum();
    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if infeas > 1e-7 * scale {
        return Oracle::Infeasible;
    }
    // drive remaining artificials out where possible
    for i in 0..m {
        if t.basis[i] >= art0 {
            if let Some(c) = (0..art0).find(|&j| t.a[i][j].abs() > 1e-7) {
                let mut dummy = vec![0.0; n + 1];
                t.pivot(i, c, &mut dummy);
            }
        }
    }

    let mut phase2 = cost.clone();
    phase2.resize(n, 0.0);
    let mut obj = t.reduced(&phase2);
    if !t.run(&mut obj, &|j| j < art0) {
        return Oracle::Unbounded;
    }

    let mut y = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        y[b] = t.a[i][n];
    }
    let x: Vec<f64> = recover
        .iter()
        .map(|r| match *r {
            Recover::Shift { col, base } => base + y[col],
            Recover::Mirror { col, base } => base - y[col],
            Recover::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    Oracle::Optimal {
        objective: p.objective_value(&x),
        x,
    }
}

/// Minimum over every 0/1 assignment of the integer variables, each
/// completion solved as an LP by `solve`. `None` when all are infeasible.
pub fn enumerate_binaries(p: &LpProblem, solve: &dyn Fn(&LpProblem) -> Option<f64>) -> Option<f64> {
    let ints = p.integers.clone();
    assert!(ints.len() <= 16, "enumeration over {} binaries", ints.len());
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << ints.len()) {
        let mut q = p.clone();
        q.integers.clear();
        let mut skip = false;
        for (k, &j) in ints.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            if v < p.lower[j] || v > p.upper[j] {
                skip = true;
            }
            q.lower[j] = v;
            q.upper[j] = v;
        }
        if skip {
            continue;
        }
        if let Some(obj) = solve(&q) {
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

/// Random LP with every variable boxed and a known feasible point.
pub fn random_bounded_lp(rng: &mut impl Rng, n: usize, m: usize) -> LpProblem {
    let mut p = LpProblem::new();
    let mut x0 = Vec::with_capacity(n);
    for j in 0..n {
        let l: f64 = rng.gen_range(-5.0..5.0);
        let u = l + rng.gen_range(0.5..10.0);
        x0.push(rng.gen_range(l..=u));
        p.add_var(format!("x{j}"), rng.gen_range(-10.0..10.0), l, u);
    }
    for i in 0..m {
        let k = rng.gen_range(1..=n.min(6));
        let coeffs: Vec<(usize, f64)> = (0..k)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(-4.0..4.0)))
            .collect();
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (rel, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Le, act + rng.gen_range(0.0..3.0)),
            1 => (Relation::Ge, act - rng.gen_range(0.0..3.0)),
            _ => (Relation::Eq, act),
        };
        p.add_constraint(format!("r{i}"), coeffs, rel, rhs);
    }
    p
}

pub fn flat_profile(demand: &[f64]) -> FlightProfile {
    FlightProfile::new("test", 1.0 / 60.0, demand.to_vec(), vec![Phase::Cruise; demand.len()]).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
