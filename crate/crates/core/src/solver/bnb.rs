//! Best-bound branch and bound over expansion vectors.
//!
//! Each search node carries a partial assignment. Its bound is the minimum
//! of the Lagrangian dual (equal to the LP relaxation value); the two
//! integral closures bracketing that minimum give a feasible incumbent and
//! the set of fractional nodes. Reduced-cost fixing at the minimizing
//! multiplier removes nodes whose flip cannot beat the incumbent, then the
//! search branches on the shallowest remaining fractional node.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::closure::{fix_collapsed, fix_expanded, Assignment, Closure, ClosureProblem, DualOutcome};
use super::{closure_problem, finish, unit_dp, within_budget, BudgetKind, Mode, SolveConfig, SolveResult, SolveStats, Status};
use crate::error::{Error, Result};
use crate::info::NodeInfoTable;

struct OpenNode {
    bound: f64,
    seq: u64,
    fix: Vec<Assignment>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // max-heap: larger bound first, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    closure: Option<Closure>,
}

impl Incumbent {
    fn value(&self) -> f64 {
        self.closure.as_ref().map_or(f64::NEG_INFINITY, |c| c.profit)
    }

    /// Keeps the better closure: higher profit, then lower weight.
    fn offer(&mut self, candidate: &Closure) {
        let better = match &self.closure {
            None => true,
            Some(cur) => {
                candidate.profit > cur.profit
                    || (candidate.profit == cur.profit && candidate.weight < cur.weight)
            }
        };
        if better {
            self.closure = Some(candidate.clone());
        }
    }
}

/// Exact solution of either budget formulation within `cfg.gap_tol`.
pub fn solve_milp(table: &NodeInfoTable, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if cfg.mode != Mode::Milp && cfg.mode != Mode::Exhaustive {
        return Err(Error::Config(format!("solve_milp called with mode {}", cfg.mode.as_str())));
    }
    let started = Instant::now();
    // A budget covering the whole tree is answered by the finest partition,
    // which attains I(X;Y) and keeps the sweep's top point at (1, 1).
    if cfg.budget_kind == BudgetKind::MaxIx {
        let all = vec![true; table.expandable()];
        let full = crate::info::selection_info(&all, table);
        if within_budget(BudgetKind::MaxIx, cfg.budget, full) {
            let stats = SolveStats {
                runtime: started.elapsed(),
                ..SolveStats::default()
            };
            return Ok(finish(table, all, cfg.budget_kind, full.i_y, Status::Optimal, stats));
        }
    }
    if cfg.unit_dp {
        if let Some(mut r) = unit_dp::solve(table, cfg.budget_kind, cfg.budget) {
            r.stats.runtime = started.elapsed();
            return Ok(r);
        }
    }
    let mut problem = closure_problem(table, cfg.budget_kind, cfg.budget);
    let (best, bound, status, explored) = branch_and_bound(&mut problem, cfg.gap_tol, cfg.node_limit);
    let stats = SolveStats {
        explored_nodes: explored,
        dp_evaluations: problem.evaluations,
        runtime: started.elapsed(),
    };
    let n = problem.len();
    Ok(match best {
        Some(c) => finish(table, c.bits, cfg.budget_kind, bound.max(c.profit), status, stats),
        None => {
            let status = match status {
                Status::NodeLimit => Status::NodeLimit,
                _ => Status::Infeasible,
            };
            finish(table, vec![false; n], cfg.budget_kind, bound, status, stats)
        }
    })
}

pub(crate) fn branch_and_bound(
    problem: &mut ClosureProblem,
    gap_tol: f64,
    node_limit: u64,
) -> (Option<Closure>, f64, Status, u64) {
    let n = problem.len();
    let mut incumbent = Incumbent { closure: None };
    let empty = problem.closure(vec![false; n]);
    if problem.is_feasible(&empty) {
        incumbent.offer(&empty);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(OpenNode {
        bound: f64::INFINITY,
        seq,
        fix: vec![Assignment::Free; n],
    });
    let mut explored = 0u64;
    let mut status = Status::Optimal;
    let mut remaining_bound = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        if node.bound <= incumbent.value() + gap_tol {
            remaining_bound = remaining_bound.max(node.bound);
            break;
        }
        if explored >= node_limit {
            remaining_bound = remaining_bound.max(node.bound);
            status = Status::NodeLimit;
            break;
        }
        explored += 1;

        let (bound, over, under, eval) = match problem.solve_dual(&node.fix) {
            DualOutcome::Infeasible => continue,
            DualOutcome::Integral(c) => {
                incumbent.offer(&c);
                continue;
            }
            DualOutcome::Fractional {
                bound,
                over,
                under,
                eval,
                ..
            } => (bound, over, under, eval),
        };
        incumbent.offer(&under);
        let target = incumbent.value() + gap_tol;
        if bound <= target {
            continue;
        }
        let improved = problem.improve(&node.fix, &under);
        incumbent.offer(&improved);
        let target = incumbent.value() + gap_tol;
        if bound <= target {
            continue;
        }

        // reduced-cost fixing
        let mut fix = node.fix;
        let reduced = problem.reduced_bounds(&fix, &eval);
        let mut conflict = false;
        for (i, r) in reduced.iter().enumerate() {
            let Some(r) = *r else { continue };
            if r > target || fix[i] != Assignment::Free {
                continue;
            }
            let ok = if eval.closure.bits[i] {
                fix_expanded(&mut fix, i)
            } else {
                fix_collapsed(&mut fix, i)
            };
            if ok.is_err() {
                conflict = true;
                break;
            }
        }
        if conflict {
            continue;
        }

        let branch = (0..n)
            .filter(|&i| fix[i] == Assignment::Free && over.bits[i] != under.bits[i])
            .min_by(|&a, &b| {
                let la = crate::quadtree::level_of_flat(a);
                let lb = crate::quadtree::level_of_flat(b);
                la.cmp(&lb)
                    .then_with(|| problem.profit[b].abs().total_cmp(&problem.profit[a].abs()))
                    .then_with(|| a.cmp(&b))
            });

        match branch {
            Some(var) => {
                let mut expand = fix.clone();
                if fix_expanded(&mut expand, var).is_ok() {
                    seq += 1;
                    heap.push(OpenNode {
                        bound,
                        seq,
                        fix: expand,
                    });
                }
                let mut collapse = fix;
                if fix_collapsed(&mut collapse, var).is_ok() {
                    seq += 1;
                    heap.push(OpenNode {
                        bound,
                        seq,
                        fix: collapse,
                    });
                }
            }
            None => {
                // fixing settled every fractional node; re-evaluate
                seq += 1;
                heap.push(OpenNode { bound, seq, fix });
            }
        }
    }

    let bound = match status {
        Status::NodeLimit => heap
            .iter()
            .map(|o| o.bound)
            .fold(remaining_bound, f64::max),
        _ => remaining_bound,
    };
    let best = incumbent.closure;
    let bound = match &best {
        Some(c) => bound.max(c.profit),
        None => bound,
    };
    (best, bound, status, explored)
}
