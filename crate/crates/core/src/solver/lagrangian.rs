use std::time::Instant;

use super::closure::{Assignment, ClosureProblem};
use super::{SolveResult, SolveStats, Status};
use crate::info::{selection_info, NodeInfoTable};
use crate::quadtree::TreeSelection;

/// Maximizes `I_Y - I_X / β` exactly over valid trees with one bottom-up
/// pass: a node is expanded iff its parent is and its subtree value
/// `ΔI_Y - ΔI_X / β + Σ child values` is strictly positive.
pub fn solve_lagrangian(table: &NodeInfoTable, beta: f64) -> SolveResult {
    let started = Instant::now();
    let mut problem = ClosureProblem::new(
        table.delta_y_vec().to_vec(),
        table.delta_x_vec().to_vec(),
        0.0,
    );
    let fix = vec![Assignment::Free; problem.len()];
    let eval = problem.evaluate(&fix, 1.0 / beta);
    let z = TreeSelection::from_bits(table.depth(), eval.closure.bits)
        .expect("DP selections match the table");
    let info = selection_info(z.bits(), table);
    let objective = info.i_y - info.i_x / beta;
    SolveResult {
        z,
        info,
        objective,
        objective_bound: objective,
        status: Status::Optimal,
        stats: SolveStats {
            explored_nodes: 1,
            dp_evaluations: problem.evaluations,
            runtime: started.elapsed(),
        },
        relaxation: None,
    }
}
