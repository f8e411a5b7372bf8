//! Times the exact solver and the relaxation on a 128×128 synthetic map.

use std::time::Instant;

use ibqt::info::{build_node_table, h_x};
use ibqt::solver::{solve, BudgetKind, Mode, SolveConfig};
use ibqt::synthetic::blobs;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let world = blobs(7, seed).expect("blob world");
    let table = build_node_table(&world);
    let top = h_x(&world);
    let only: Option<usize> = std::env::args().nth(2).and_then(|s| s.parse().ok());
    let limit: u64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    for k in 1..=10 {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let budget = top * k as f64 / 11.0;
        for mode in [Mode::Milp, Mode::Relax] {
            let cfg = SolveConfig { node_limit: limit, ..SolveConfig::new(mode, BudgetKind::MaxIx, budget) };
            let t = Instant::now();
            let r = solve(&table, &cfg).expect("solve");
            println!(
                "{:>5} D={budget:.4} i_x={:.6} i_y={:.9} bound={:.9} status={} nodes={} dp={} {:.3}s",
                mode.as_str(),
                r.info.i_x,
                r.info.i_y,
                r.objective_bound,
                r.status.as_str(),
                r.stats.explored_nodes,
                r.stats.dp_evaluations,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
