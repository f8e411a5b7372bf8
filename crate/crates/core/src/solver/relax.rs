use std::time::Instant;

use super::closure::{Assignment, DualOutcome};
use super::{
    closure_problem, external_value, finish, within_budget, BudgetKind, Mode, RelaxationReport,
    SolveConfig, SolveResult, SolveStats, Status,
};
use crate::error::{Error, Result};
use crate::info::NodeInfoTable;

/// Fractional LP solution: the convex combination of the two bracketing
/// integral closures that meets the budget exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// One value in `[0, 1]` per expandable node, flat order.
    pub z: Vec<f64>,
    /// LP optimum in the formulation's objective.
    pub value: f64,
}

/// Solves the LP relaxation (`z` in `[0, 1]`, precedence kept). Returns
/// `None` when even the relaxation is infeasible.
pub fn solve_lp(table: &NodeInfoTable, kind: BudgetKind, budget: f64) -> Option<LpSolution> {
    let mut problem = closure_problem(table, kind, budget);
    let fix = vec![Assignment::Free; problem.len()];
    match problem.solve_dual(&fix) {
        DualOutcome::Infeasible => None,
        DualOutcome::Integral(c) => Some(LpSolution {
            z: c.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            value: external_value(kind, c.profit),
        }),
        DualOutcome::Fractional {
            over,
            under,
            fraction,
            ..
        } => {
            let z: Vec<f64> = over
                .bits
                .iter()
                .zip(&under.bits)
                .map(|(&o, &u)| match (o, u) {
                    (true, true) => 1.0,
                    (true, false) => fraction,
                    (false, true) => 1.0 - fraction,
                    (false, false) => 0.0,
                })
                .collect();
            let value = under.profit + fraction * (over.profit - under.profit);
            Some(LpSolution {
                z,
                value: external_value(kind, value),
            })
        }
    }
}

/// LP relaxation followed by `>= 0.5` truncation.
///
/// The truncated tree is reported with its true information values. When
/// it misses an `I_Y` threshold this is flagged in the report. When it
/// exceeds an `I_X` budget, the fractional nodes are rounded down instead
/// (the budget-respecting bracketing closure), and the report says so.
pub fn solve_relaxation(table: &NodeInfoTable, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if cfg.mode != Mode::Relax {
        return Err(Error::Config(format!(
            "solve_relaxation called with mode {}",
            cfg.mode.as_str()
        )));
    }
    let started = Instant::now();
    let kind = cfg.budget_kind;
    let n = table.expandable();
    let internal = |v: f64| external_value(kind, v);

    let Some(lp) = solve_lp(table, kind, cfg.budget) else {
        let stats = SolveStats {
            runtime: started.elapsed(),
            ..SolveStats::default()
        };
        return Ok(finish(
            table,
            vec![false; n],
            kind,
            f64::NEG_INFINITY,
            Status::Infeasible,
            stats,
        ));
    };

    let fractional_nodes = lp.z.iter().filter(|&&v| v > 0.0 && v < 1.0).count();
    let mut bits: Vec<bool> = lp.z.iter().map(|&v| v >= 0.5).collect();
    let mut repaired_pairs = 0;
    for i in 1..n {
        if bits[i] && !bits[(i - 1) / 4] {
            bits[i] = false;
            repaired_pairs += 1;
        }
    }

    let info = crate::info::selection_info(&bits, table);
    let truncation_within_budget = within_budget(kind, cfg.budget, info);
    let mut rounded_down = false;
    if kind == BudgetKind::MaxIx && !truncation_within_budget {
        bits = lp.z.iter().map(|&v| v >= 1.0).collect();
        rounded_down = true;
    }

    let status = if fractional_nodes == 0 {
        Status::Optimal
    } else {
        Status::FeasibleHeuristic
    };
    let stats = SolveStats {
        explored_nodes: 1,
        dp_evaluations: 0,
        runtime: started.elapsed(),
    };
    let mut result = finish(table, bits, kind, internal(lp.value), status, stats);
    result.relaxation = Some(RelaxationReport {
        lp_value: lp.value,
        fractional_nodes,
        repaired_pairs,
        truncation_within_budget,
        rounded_down,
    });
    Ok(result)
}
