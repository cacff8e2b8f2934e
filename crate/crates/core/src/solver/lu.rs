//! Left-looking sparse LU factorisation of a simplex basis.
//!
//! Columns are processed in order of increasing nonzero count; within a
//! column the pivot row is chosen by threshold partial pivoting, preferring
//! rows with few nonzeros. Columns that turn out numerically dependent are
//! reported so the caller can swap in logical columns.

const DROP_TOL: f64 = 1e-14;
const SINGULAR_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactors {
    m: usize,
    /// Pivot row of elimination step k.
    prow: Vec<usize>,
    /// Basis position eliminated at step k.
    cpos: Vec<usize>,
    /// Sub-diagonal multipliers of step k as (row, value).
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Above-diagonal entries of step k as (earlier step, value).
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

/// Basis positions that could not be pivoted and the rows left without a pivot.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactors {
    /// Factorises the `m x m` matrix whose column at position `p` is `columns[p]`.
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(i, _) in col {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));

        let mut f = LuFactors {
            m,
            prow: Vec::with_capacity(m),
            cpos: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
        };
        let mut step_of_row: Vec<Option<usize>> = vec![None; m];
        let mut work = vec![0.0; m];
        let mut touched = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut failed = Vec::new();

        for &p in &order {
            for &(i, a) in &columns[p] {
                if !touched[i] {
                    touched[i] = true;
                    pattern.push(i);
                }
                work[i] += a;
            }
            // apply earlier eliminations in step order
            for k in 0..f.prow.len() {
                let v = work[f.prow[k]];
                if v == 0.0 {
                    continue;
                }
                for &(i, l) in &f.l_cols[k] {
                    if !touched[i] {
                        touched[i] = true;
                        pattern.push(i);
                    }
                    work[i] -= l * v;
                }
            }

            let mut u_col = Vec::new();
            let mut cand_max = 0.0f64;
            for &i in &pattern {
                match step_of_row[i] {
                    Some(k) => {
                        if work[i].abs() > DROP_TOL {
                            u_col.push((k, work[i]));
                        }
                    }
                    None => cand_max = cand_max.max(work[i].abs()),
                }
            }

            if cand_max <= SINGULAR_TOL {
                failed.push(p);
            } else {
                let mut best: Option<usize> = None;
                for &i in &pattern {
                    if step_of_row[i].is_some() || work[i].abs() < THRESHOLD * cand_max {
                        continue;
                    }
                    best = match best {
                        None => Some(i),
                        Some(b) => {
                            let key_i = (row_count[i], std::cmp::Reverse(ord(work[i].abs())), i);
                            let key_b = (row_count[b], std::cmp::Reverse(ord(work[b].abs())), b);
                            if key_i < key_b {
                                Some(i)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
                let r = best.expect("candidate above threshold exists");
                let piv = work[r];
                let l_col: Vec<(usize, f64)> = pattern
                    .iter()
                    .filter(|&&i| i != r && step_of_row[i].is_none() && work[i].abs() > DROP_TOL)
                    .map(|&i| (i, work[i] / piv))
                    .collect();
                u_col.sort_by_key(|e| e.0);
                step_of_row[r] = Some(f.prow.len());
                f.prow.push(r);
                f.cpos.push(p);
                f.l_cols.push(l_col);
                f.u_cols.push(u_col);
                f.u_diag.push(piv);
            }

            for &i in &pattern {
                work[i] = 0.0;
                touched[i] = false;
            }
            pattern.clear();
        }

        if failed.is_empty() {
            Ok(f)
        } else {
            let rows = (0..m).filter(|i| step_of_row[*i].is_none()).collect();
            Err(Singular {
                positions: failed,
                rows,
            })
        }
    }

    /// Solves `B x = b`. `b` is row-indexed and is overwritten; `out` is
    /// indexed by basis position.
    pub(crate) fn ftran(&self, b: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let v = b[self.prow[k]];
            if v == 0.0 {
                continue;
            }
            for &(i, l) in &self.l_cols[k] {
                b[i] -= l * v;
            }
        }
        for k in (0..self.m).rev() {
            let v = b[self.prow[k]] / self.u_diag[k];
            out[self.cpos[k]] = v;
            if v == 0.0 {
                continue;
            }
            for &(kk, u) in &self.u_cols[k] {
                b[self.prow[kk]] -= u * v;
            }
        }
    }

    /// Solves `B' y = c`. `c` is indexed by basis position; `y` by row.
    pub(crate) fn btran(&self, c: &[f64], y: &mut [f64]) {
        let mut v = vec![0.0; self.m];
        for k in 0..self.m {
            let mut s = c[self.cpos[k]];
            for &(kk, u) in &self.u_cols[k] {
                s -= u * v[kk];
            }
            v[k] = s / self.u_diag[k];
        }
        for k in 0..self.m {
            y[self.prow[k]] = v[k];
        }
        for k in (0..self.m).rev() {
            let r = self.prow[k];
            let mut s = y[r];
            for &(i, l) in &self.l_cols[k] {
                s -= l * y[i];
            }
            y[r] = s;
        }
    }
}

// total order on non-negative finite magnitudes
fn ord(v: f64) -> u64 {
    v.to_bits()
}
