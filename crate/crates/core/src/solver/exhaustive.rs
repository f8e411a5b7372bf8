use std::cmp::Ordering;
use std::time::Instant;

use super::{finish, objective_of, within_budget, BudgetKind, SolveConfig, SolveResult, SolveStats, Status};
use crate::error::Result;
use crate::info::{selection_info, InfoValue, NodeInfoTable};
use crate::quadtree::enumerate_all_selections_capped;

/// Enumerates every valid tree and returns the exact optimum. Ties go to the
/// smaller `I_X` (larger `I_Y` when minimizing `I_X`), then to the
/// lexicographically smaller expansion vector.
pub fn solve_exhaustive(table: &NodeInfoTable, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let started = Instant::now();
    let kind = cfg.budget_kind;
    let mut best: Option<(InfoValue, Vec<bool>)> = None;
    let mut explored = 0u64;
    for z in enumerate_all_selections_capped(table.depth(), cfg.enumeration_cap)? {
        explored += 1;
        let info = selection_info(z.bits(), table);
        if !within_budget(kind, cfg.budget, info) {
            continue;
        }
        let better = match &best {
            None => true,
            Some((cur, bits)) => match compare(kind, info, *cur) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => z.bits() < bits.as_slice(),
            },
        };
        if better {
            best = Some((info, z.bits().to_vec()));
        }
    }
    let stats = SolveStats {
        explored_nodes: explored,
        dp_evaluations: 0,
        runtime: started.elapsed(),
    };
    let n = table.expandable();
    Ok(match best {
        Some((info, bits)) => {
            let internal = match kind {
                BudgetKind::MaxIx => info.i_y,
                BudgetKind::MinIy => -info.i_x,
            };
            finish(table, bits, kind, internal, Status::Optimal, stats)
        }
        None => finish(table, vec![false; n], kind, f64::NEG_INFINITY, Status::Infeasible, stats),
    })
}

/// `Greater` when `a` is preferred over `b`.
fn compare(kind: BudgetKind, a: InfoValue, b: InfoValue) -> Ordering {
    let (oa, ob) = (objective_of(kind, a), objective_of(kind, b));
    match kind {
        BudgetKind::MaxIx => oa.total_cmp(&ob).then_with(|| b.i_x.total_cmp(&a.i_x)),
        BudgetKind::MinIy => ob.total_cmp(&oa).then_with(|| a.i_y.total_cmp(&b.i_y)),
    }
}
