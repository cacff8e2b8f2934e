use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::rc::Rc;

use super::simplex::{LpStatus, Simplex, WarmStart};
use super::{Presolved, SolverConfig, Status};

pub(crate) struct BnbOutcome {
    pub status: Status,
    pub incumbent: Option<Vec<f64>>,
    pub bound: Option<f64>,
    pub nodes: usize,
    pub iterations: usize,
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// (lower, upper) for every integer variable.
    fix: Vec<(f64, f64)>,
    warm: Option<Rc<WarmStart>>,
}

// BinaryHeap pops the greatest: lowest bound, then deepest, then oldest.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

fn gap_tol(cfg: &SolverConfig, incumbent: f64) -> f64 {
    cfg.mip_gap * incumbent.abs().max(1.0)
}

pub(crate) fn branch_and_bound(
    pre: &Presolved,
    cfg: &SolverConfig,
    mut log: Option<&mut dyn Write>,
) -> BnbOutcome {
    let sf = &pre.sf;
    let ints = &pre.integers;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq,
        fix: ints.iter().map(|&j| (sf.lo[j], sf.up[j])).collect(),
        warm: None,
    });

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut status = None;
    let mut final_bound = None;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - gap_tol(cfg, *inc) {
                final_bound = Some(node.bound.min(*inc));
                status = Some(Status::Optimal);
                break;
            }
        }
        if nodes >= cfg.max_nodes {
            final_bound = Some(node.bound);
            status = Some(Status::NodeLimit);
            break;
        }
        nodes += 1;

        let (mut lo, mut up) = (sf.lo.clone(), sf.up.clone());
        for (k, &j) in ints.iter().enumerate() {
            lo[j] = node.fix[k].0;
            up[j] = node.fix[k].1;
        }
        let mut spx = match &node.warm {
            Some(ws) => Simplex::warm(sf, cfg, lo, up, ws),
            None => Simplex::new(sf, cfg, lo, up),
        };
        let lp_status = spx.solve(None);
        iterations += spx.iterations;
        match lp_status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                write_node(&mut log, nodes, node.depth, None, &incumbent, "infeasible");
                continue;
            }
            LpStatus::Unbounded => {
                return BnbOutcome {
                    status: Status::Unbounded,
                    incumbent: None,
                    bound: None,
                    nodes,
                    iterations,
                };
            }
            LpStatus::IterLimit => {
                return BnbOutcome {
                    status: Status::IterLimit,
                    incumbent: incumbent.map(|(_, x)| x),
                    bound: None,
                    nodes,
                    iterations,
                };
            }
        }
        let obj = spx.objective() + pre.offset;
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - gap_tol(cfg, *inc) {
                write_node(&mut log, nodes, node.depth, Some(obj), &incumbent, "pruned");
                continue;
            }
        }

        let fractional = ints.iter().enumerate().find(|&(_, &j)| {
            let v = spx.x[j];
            (v - v.round()).abs() > cfg.int_tol
        });

        match fractional {
            None => {
                // polish: re-solve with the integers pinned to their rounded values
                let (mut lo, mut up) = (spx.lo.clone(), spx.up.clone());
                for &j in ints {
                    let v = spx.x[j].round();
                    lo[j] = v;
                    up[j] = v;
                }
                let ws = spx.warm_start();
                let mut polish = Simplex::warm(sf, cfg, lo, up, &ws);
                let st = polish.solve(None);
                iterations += polish.iterations;
                let (val, x) = if st == LpStatus::Optimal {
                    (polish.objective() + pre.offset, polish.x[..sf.n].to_vec())
                } else {
                    (obj, spx.x[..sf.n].to_vec())
                };
                if incumbent.as_ref().map_or(true, |(inc, _)| val < *inc) {
                    incumbent = Some((val, x));
                }
                write_node(&mut log, nodes, node.depth, Some(obj), &incumbent, "integral");
            }
            Some((k, _)) => {
                write_node(&mut log, nodes, node.depth, Some(obj), &incumbent, "branch");
                let warm = Rc::new(spx.warm_start());
                for value in [0.0, 1.0] {
                    let mut fix = node.fix.clone();
                    fix[k] = (value, value);
                    seq += 1;
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        seq,
                        fix,
                        warm: Some(Rc::clone(&warm)),
                    });
                }
            }
        }
    }

    let status = status.unwrap_or(if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    });
    let bound = final_bound.or_else(|| incumbent.as_ref().map(|(v, _)| *v));
    if let Some(w) = log.as_deref_mut() {
        let inc = incumbent.as_ref().map_or(f64::NAN, |(v, _)| *v);
        let _ = writeln!(w, "event=bnb_done status={status:?} nodes={nodes} incumbent={inc:e}");
    }
    BnbOutcome {
        status,
        incumbent: incumbent.map(|(_, x)| x),
        bound,
        nodes,
        iterations,
    }
}

fn write_node(
    log: &mut Option<&mut dyn Write>,
    node: usize,
    depth: usize,
    lp: Option<f64>,
    incumbent: &Option<(f64, Vec<f64>)>,
    action: &str,
) {
    let Some(w) = log.as_deref_mut() else {
        return;
    };
    let bound = lp.unwrap_or(f64::INFINITY);
    let inc = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
    let gap = if inc.is_finite() && bound.is_finite() {
        ((inc - bound) / inc.abs().max(1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    let _ = writeln!(
        w,
        "event=node node={node} depth={depth} bound={bound:e} incumbent={inc:e} gap={gap:e} action={action}"
    );
}
