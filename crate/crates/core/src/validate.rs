//! Invariant suite run by `ibqt validate`: telescoping against the direct
//! mutual information, data processing bounds, solver agreement with the
//! exhaustive oracle, the relaxation bound ordering and Lagrangian
//! self-optimality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::GridWorld;
use crate::info::{build_node_table, direct_mi, h_x, mi_xy, tree_info, NodeInfoTable};
use crate::quadtree::{enumerate_all_selections_capped, TreeSelection, DEFAULT_ENUMERATION_CAP};
use crate::solver::{solve, solve_lagrangian, solve_lp, BudgetKind, Mode, SolveConfig, Status};
use crate::sweep::default_betas;
use crate::synthetic::random_selection;

pub const MATCH_TOL: f64 = 1e-9;
pub const DPI_TOL: f64 = 1e-12;
/// Random trees checked when enumeration is skipped or too large.
pub const SAMPLED_TREES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, ok: bool, detail: String) -> Self {
        Check {
            name,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            detail,
        }
    }

    fn skip(name: &'static str, why: &str) -> Self {
        Check {
            name,
            outcome: Outcome::Skip,
            detail: why.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ValidateOptions {
    /// Skip the checks that enumerate every tree.
    pub skip_exhaustive: bool,
    /// Seed for sampled trees.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub h_x: f64,
    pub mi_xy: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }
}

pub fn run(world: &GridWorld, options: ValidateOptions) -> Result<Report> {
    let table = build_node_table(world);
    let depth = world.depth();
    let enumerate = !options.skip_exhaustive && depth <= DEFAULT_ENUMERATION_CAP;
    let trees: Vec<TreeSelection> = if enumerate {
        enumerate_all_selections_capped(depth, DEFAULT_ENUMERATION_CAP)?.collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut v = vec![TreeSelection::empty(depth), TreeSelection::full(depth)];
        v.extend((0..SAMPLED_TREES).map(|k| random_selection(depth, 0.3 + 0.6 * (k % 4) as f64 / 3.0, &mut rng)));
        v
    };
    let scope = if enumerate { "all" } else { "sampled" };
    let mut checks = vec![
        telescoping(&trees, &table, world, scope)?,
        dpi(&trees, &table, world, scope)?,
    ];
    if enumerate {
        checks.push(oracle(&table, world, BudgetKind::MaxIx)?);
        checks.push(oracle(&table, world, BudgetKind::MinIy)?);
    } else {
        checks.push(Check::skip("oracle_max_ix", "enumeration skipped"));
        checks.push(Check::skip("oracle_min_iy", "enumeration skipped"));
    }
    checks.push(sandwich(&table, world)?);
    checks.push(lagrangian(&table)?);
    Ok(Report {
        h_x: h_x(world),
        mi_xy: mi_xy(world),
        checks,
    })
}

fn telescoping(trees: &[TreeSelection], table: &NodeInfoTable, world: &GridWorld, scope: &str) -> Result<Check> {
    let mut worst = 0.0f64;
    for z in trees {
        let a = tree_info(z, table)?;
        let b = direct_mi(z, world)?;
        worst = worst.max((a.i_x - b.i_x).abs()).max((a.i_y - b.i_y).abs());
    }
    Ok(Check::new(
        "telescoping",
        worst <= MATCH_TOL,
        format!("{} {scope} trees, max deviation {worst:.3e}", trees.len()),
    ))
}

fn dpi(trees: &[TreeSelection], table: &NodeInfoTable, world: &GridWorld, scope: &str) -> Result<Check> {
    let cap = mi_xy(world);
    let mut worst = f64::NEG_INFINITY;
    for z in trees {
        let v = tree_info(z, table)?;
        worst = worst.max(v.i_y - v.i_x).max(v.i_y - cap);
    }
    Ok(Check::new(
        "dpi",
        worst <= DPI_TOL,
        format!("{} {scope} trees, max excess {worst:.3e}", trees.len()),
    ))
}

fn budgets(world: &GridWorld, kind: BudgetKind) -> Vec<f64> {
    let top = match kind {
        BudgetKind::MaxIx => h_x(world),
        BudgetKind::MinIy => mi_xy(world),
    };
    [0.0, 0.2, 0.45, 0.7, 1.0].iter().map(|f| f * top).collect()
}

fn oracle(table: &NodeInfoTable, world: &GridWorld, kind: BudgetKind) -> Result<Check> {
    let name = match kind {
        BudgetKind::MaxIx => "oracle_max_ix",
        BudgetKind::MinIy => "oracle_min_iy",
    };
    let mut worst = 0.0f64;
    let mut status_mismatch = 0;
    let list = budgets(world, kind);
    for &budget in &list {
        let exact = solve(table, &SolveConfig::new(Mode::Exhaustive, kind, budget))?;
        for unit_dp in [false, true] {
            let cfg = SolveConfig {
                unit_dp,
                ..SolveConfig::new(Mode::Milp, kind, budget)
            };
            let r = solve(table, &cfg)?;
            if r.status != exact.status {
                status_mismatch += 1;
            } else if exact.status == Status::Optimal {
                worst = worst.max((r.objective - exact.objective).abs());
            }
        }
    }
    Ok(Check::new(
        name,
        worst <= MATCH_TOL && status_mismatch == 0,
        format!(
            "{} budgets, max deviation {worst:.3e}, {status_mismatch} status mismatches",
            list.len()
        ),
    ))
}

fn sandwich(table: &NodeInfoTable, world: &GridWorld) -> Result<Check> {
    let mut violations = 0;
    let mut repairs = 0;
    let list = budgets(world, BudgetKind::MaxIx);
    for &budget in &list {
        let milp = solve(table, &SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, budget))?;
        let relax = solve(table, &SolveConfig::new(Mode::Relax, BudgetKind::MaxIx, budget))?;
        let lp = solve_lp(table, BudgetKind::MaxIx, budget).map_or(f64::NEG_INFINITY, |l| l.value);
        if relax.objective > milp.objective + MATCH_TOL || milp.objective > lp + MATCH_TOL {
            violations += 1;
        }
        repairs += relax.relaxation.as_ref().map_or(0, |r| r.repaired_pairs);
    }
    Ok(Check::new(
        "bound_sandwich",
        violations == 0 && repairs == 0,
        format!("{} budgets, {violations} order violations, {repairs} repaired pairs", list.len()),
    ))
}

fn lagrangian(table: &NodeInfoTable) -> Result<Check> {
    let betas = default_betas();
    let mut worst = 0.0f64;
    for &beta in &betas {
        let t = solve_lagrangian(table, beta);
        let cfg = SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, t.info.i_x);
        let r = solve(table, &cfg)?;
        worst = worst.max((r.info.i_y - t.info.i_y).abs());
    }
    Ok(Check::new(
        "lagrangian_self_optimality",
        worst <= MATCH_TOL,
        format!("{} betas, max deviation {worst:.3e}", betas.len()),
    ))
}
