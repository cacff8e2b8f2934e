//! Bounded-variable revised primal simplex.
//!
//! Rows are turned into equalities `A x - r = 0` with one logical variable
//! `r_i` per row carrying the row bounds, so the all-logical basis `-I` is
//! always available as a start. Nonbasic variables sit at a bound (or at
//! zero when free). Phase 1 minimises the sum of bound violations of the
//! basic variables with a first-breakpoint ratio test, so violations never
//! grow; phase 2 runs on the true costs. The basis inverse is kept as a
//! sparse LU factorisation plus a product-form eta file.

use std::io::Write;

use super::lu::LuFactors;
use super::{PivotRule, SolverConfig};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Problem in computational form. Variables `0..n` are structural, `n..n+m`
/// are the row logicals.
#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub m: usize,
    pub n: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
}

impl StdForm {
    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            ColumnRef::Structural(&self.cols[j])
        } else {
            ColumnRef::Logical(j - self.n)
        }
    }
}

enum ColumnRef<'a> {
    Structural(&'a [(usize, f64)]),
    Logical(usize),
}

impl ColumnRef<'_> {
    fn dot(&self, y: &[f64]) -> f64 {
        match self {
            ColumnRef::Structural(c) => c.iter().map(|&(i, a)| a * y[i]).sum(),
            ColumnRef::Logical(i) => -y[*i],
        }
    }

    fn scatter(&self, scale: f64, out: &mut [f64]) {
        match self {
            ColumnRef::Structural(c) => {
                for &(i, a) in c.iter() {
                    out[i] += scale * a;
                }
            }
            ColumnRef::Logical(i) => out[*i] -= scale,
        }
    }

    fn to_vec(&self) -> Vec<(usize, f64)> {
        match self {
            ColumnRef::Structural(c) => c.to_vec(),
            ColumnRef::Logical(i) => vec![(*i, -1.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

/// Basis snapshot used to warm-start a related problem.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    pub status: Vec<VarStatus>,
    pub basis: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    col: Vec<(usize, f64)>,
}

pub(crate) struct Simplex<'a> {
    sf: &'a StdForm,
    cfg: &'a SolverConfig,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub status: Vec<VarStatus>,
    basis: Vec<usize>,
    pub x: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    pub iterations: usize,
    /// Entering variable of every pivot, for determinism checks.
    pub trace: Vec<usize>,
    record_trace: bool,
}

impl<'a> Simplex<'a> {
    /// Cold start from the all-logical basis.
    pub(crate) fn new(sf: &'a StdForm, cfg: &'a SolverConfig, lo: Vec<f64>, up: Vec<f64>) -> Self {
        let n = sf.n;
        let m = sf.m;
        let mut status = vec![VarStatus::Basic; n + m];
        for j in 0..n {
            status[j] = nonbasic_status(lo[j], up[j]);
        }
        let basis = (n..n + m).collect();
        Self::with_basis(sf, cfg, lo, up, status, basis)
    }

    pub(crate) fn warm(
        sf: &'a StdForm,
        cfg: &'a SolverConfig,
        lo: Vec<f64>,
        up: Vec<f64>,
        ws: &WarmStart,
    ) -> Self {
        let mut status = ws.status.clone();
        for j in 0..sf.n + sf.m {
            if status[j] != VarStatus::Basic {
                status[j] = match status[j] {
                    VarStatus::AtUpper if up[j].is_finite() => VarStatus::AtUpper,
                    _ => nonbasic_status(lo[j], up[j]),
                };
            }
        }
        Self::with_basis(sf, cfg, lo, up, status, ws.basis.clone())
    }

    fn with_basis(
        sf: &'a StdForm,
        cfg: &'a SolverConfig,
        lo: Vec<f64>,
        up: Vec<f64>,
        status: Vec<VarStatus>,
        basis: Vec<usize>,
    ) -> Self {
        let mut s = Simplex {
            sf,
            cfg,
            lo,
            up,
            status,
            basis,
            x: vec![0.0; sf.n + sf.m],
            lu: LuFactors::default(),
            etas: Vec::new(),
            iterations: 0,
            trace: Vec::new(),
            record_trace: false,
        };
        s.refactor();
        s
    }

    pub(crate) fn record_trace(&mut self, on: bool) {
        self.record_trace = on;
    }

    pub(crate) fn warm_start(&self) -> WarmStart {
        WarmStart {
            status: self.status.clone(),
            basis: self.basis.clone(),
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.up[j],
            VarStatus::Free | VarStatus::Basic => 0.0,
        }
    }

    /// Refactorises the basis (repairing singularities with logicals) and
    /// recomputes every primal value.
    fn refactor(&mut self) {
        let m = self.sf.m;
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basis
                .iter()
                .map(|&j| self.sf.column(j).to_vec())
                .collect();
            match LuFactors::factorize(m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        self.status[out] = nonbasic_status(self.lo[out], self.up[out]);
                        let logical = self.sf.n + row;
                        self.basis[pos] = logical;
                        self.status[logical] = VarStatus::Basic;
                    }
                }
            }
        }
        self.etas.clear();
        for j in 0..self.sf.n + m {
            if self.status[j] != VarStatus::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        let mut rhs = vec![0.0; m];
        for j in 0..self.sf.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                self.sf.column(j).scatter(-self.x[j], &mut rhs);
            }
        }
        let mut xb = vec![0.0; m];
        self.lu.ftran(&mut rhs, &mut xb);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.sf.m;
        let mut rhs = vec![0.0; m];
        self.sf.column(j).scatter(1.0, &mut rhs);
        let mut out = vec![0.0; m];
        self.lu.ftran(&mut rhs, &mut out);
        for eta in &self.etas {
            let xr = out[eta.pos] / eta.pivot;
            out[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, a) in &eta.col {
                    out[i] -= a * xr;
                }
            }
        }
        out
    }

    fn btran(&self, c: &mut [f64]) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.col {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let mut y = vec![0.0; self.sf.m];
        self.lu.btran(c, &mut y);
        y
    }

    fn basic_infeasibility(&self, pos: usize) -> f64 {
        let j = self.basis[pos];
        let tol = self.cfg.feas_tol;
        if self.x[j] < self.lo[j] - tol {
            -1.0
        } else if self.x[j] > self.up[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    /// Sum of basic bound violations.
    pub(crate) fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| (self.lo[j] - self.x[j]).max(self.x[j] - self.up[j]).max(0.0))
            .sum()
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.sf.n).map(|j| self.sf.cost[j] * self.x[j]).sum()
    }

    pub(crate) fn solve(&mut self, mut log: Option<&mut dyn Write>) -> LpStatus {
        let n_all = self.sf.n + self.sf.m;
        let m = self.sf.m;
        let mut degenerate_streak = 0usize;
        let mut last_phase = 0u8;
        let mut rechecks = 0usize;

        loop {
            if self.iterations >= self.cfg.max_iters {
                return LpStatus::IterLimit;
            }

            let mut c_b = vec![0.0; m];
            let mut phase1 = false;
            for (pos, c) in c_b.iter_mut().enumerate() {
                let s = self.basic_infeasibility(pos);
                if s != 0.0 {
                    phase1 = true;
                }
                *c = s;
            }
            if !phase1 {
                for (pos, c) in c_b.iter_mut().enumerate() {
                    let j = self.basis[pos];
                    *c = if j < self.sf.n { self.sf.cost[j] } else { 0.0 };
                }
            }
            let phase = if phase1 { 1 } else { 2 };
            if phase != last_phase {
                if let Some(w) = log.as_deref_mut() {
                    let value = if phase1 { self.infeasibility() } else { self.objective() };
                    let _ = writeln!(
                        w,
                        "event=simplex_phase phase={phase} iter={} value={value:e}",
                        self.iterations
                    );
                }
                last_phase = phase;
            }
            let y = self.btran(&mut c_b);

            let bland = self.cfg.pivot_rule == PivotRule::Bland
                || degenerate_streak > self.cfg.stall_threshold;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..n_all {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let cj = if phase1 || j >= self.sf.n { 0.0 } else { self.sf.cost[j] };
                let d = cj - self.sf.column(j).dot(&y);
                let eligible = match st {
                    VarStatus::AtLower => d < -self.cfg.opt_tol,
                    VarStatus::AtUpper => d > self.cfg.opt_tol,
                    VarStatus::Free => d.abs() > self.cfg.opt_tol,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }

            let Some((q, d_q)) = entering else {
                if phase1 {
                    return LpStatus::Infeasible;
                }
                // confirm on a fresh factorisation before declaring optimality
                if self.etas.is_empty() || rechecks > 3 {
                    return LpStatus::Optimal;
                }
                rechecks += 1;
                self.refactor();
                continue;
            };

            let alpha = self.ftran(q);
            let dir = if d_q < 0.0 { 1.0 } else { -1.0 };
            let step = self.ratio_test(q, dir, &alpha, phase1, bland);

            match step {
                Step::Unbounded => {
                    if phase1 {
                        // numerical trouble: a phase-1 direction always has a breakpoint
                        if self.etas.is_empty() {
                            return LpStatus::Infeasible;
                        }
                        self.refactor();
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
                Step::Flip => {
                    let theta = self.up[q] - self.lo[q];
                    self.apply_step(q, dir, theta, &alpha);
                    self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.x[q] = self.nonbasic_value(q);
                    degenerate_streak = 0;
                }
                Step::Pivot { pos, theta, to_upper } => {
                    self.apply_step(q, dir, theta, &alpha);
                    let leaving = self.basis[pos];
                    self.status[leaving] = if to_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.x[leaving] = self.nonbasic_value(leaving);
                    self.status[q] = VarStatus::Basic;
                    self.basis[pos] = q;
                    let col = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, a)| i != pos && *a != 0.0)
                        .map(|(i, a)| (i, *a))
                        .collect();
                    self.etas.push(Eta {
                        pos,
                        pivot: alpha[pos],
                        col,
                    });
                    if theta <= DEGENERATE_STEP {
                        degenerate_streak += 1;
                    } else {
                        degenerate_streak = 0;
                    }
                    if self.etas.len() >= REFACTOR_INTERVAL {
                        self.refactor();
                    }
                }
            }
            if self.record_trace {
                self.trace.push(q);
            }
            self.iterations += 1;
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, theta: f64, alpha: &[f64]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[pos];
                self.x[j] -= dir * theta * a;
            }
        }
    }

    /// Harris two-pass ratio test. In phase 1 an infeasible basic variable
    /// moving towards its bounds blocks at the violated bound.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Step {
        let tol = self.cfg.feas_tol;
        // (pos, exact ratio, relaxed ratio, hits upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let rate = -dir * a;
            let xj = self.x[j];
            let (lo, up) = (self.lo[j], self.up[j]);
            if rate < 0.0 {
                let target = if xj > up + tol {
                    Some((up, true))
                } else if xj >= lo - tol || !phase1 {
                    lo.is_finite().then_some((lo, false))
                } else {
                    None
                };
                if let Some((b, hits_upper)) = target {
                    let exact = ((xj - b) / -rate).max(0.0);
                    let relaxed = (xj - b + tol) / -rate;
                    cands.push((pos, exact, relaxed, hits_upper));
                }
            } else {
                let target = if xj < lo - tol {
                    Some((lo, false))
                } else if xj <= up + tol || !phase1 {
                    up.is_finite().then_some((up, true))
                } else {
                    None
                };
                if let Some((b, hits_upper)) = target {
                    let exact = ((b - xj) / rate).max(0.0);
                    let relaxed = (b - xj + tol) / rate;
                    cands.push((pos, exact, relaxed, hits_upper));
                }
            }
        }

        let flip = self.up[q] - self.lo[q];
        let relaxed_min = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        if flip.is_finite() && flip <= relaxed_min {
            return Step::Flip;
        }
        if cands.is_empty() {
            return Step::Unbounded;
        }
        let mut best: Option<(usize, f64, f64, bool)> = None;
        for &c in &cands {
            if c.1 > relaxed_min {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) => {
                    let better = if bland {
                        self.basis[c.0] < self.basis[b.0]
                    } else {
                        alpha[c.0].abs() > alpha[b.0].abs()
                    };
                    if better {
                        Some(c)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let (pos, theta, _, to_upper) = best.expect("nonempty candidate set");
        Step::Pivot { pos, theta, to_upper }
    }

    /// Row duals and reduced costs of the current basis for the true costs.
    pub(crate) fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.sf.m;
        let mut c_b: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| if j < self.sf.n { self.sf.cost[j] } else { 0.0 })
            .collect();
        let y = self.btran(&mut c_b);
        let d = (0..self.sf.n + m)
            .map(|j| {
                let cj = if j < self.sf.n { self.sf.cost[j] } else { 0.0 };
                cj - self.sf.column(j).dot(&y)
            })
            .collect();
        (y, d)
    }

    /// Lagrangian lower bound `min_{lo<=z<=up} d'z` built from the reduced costs.
    pub(crate) fn dual_bound(&self) -> f64 {
        let (_, d) = self.duals();
        let mut bound = 0.0;
        for (j, &dj) in d.iter().enumerate() {
            if dj.abs() <= self.cfg.opt_tol {
                continue;
            }
            let b = if dj > 0.0 { self.lo[j] } else { self.up[j] };
            if !b.is_finite() {
                return f64::NEG_INFINITY;
            }
            bound += dj * b;
        }
        bound
    }
}

enum Step {
    Unbounded,
    Flip,
    Pivot { pos: usize, theta: f64, to_upper: bool },
}

fn nonbasic_status(lo: f64, up: f64) -> VarStatus {
    if lo.is_finite() {
        VarStatus::AtLower
    } else if up.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}
