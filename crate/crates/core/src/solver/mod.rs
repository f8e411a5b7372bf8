//! Solvers for the information-bottleneck tree problem.
//!
//! * [`solve_milp`]: exact branch-and-bound over binary expansion vectors.
//! * [`solve_lagrangian`]: exact tree DP for the `β`-weighted objective.
//! * [`solve_relaxation`]: LP relaxation with `>= 0.5` truncation.
//! * [`solve_exhaustive`]: enumeration oracle for depth <= 3.
//!
//! Two budget formulations are supported: maximize `I_Y` subject to
//! `I_X <= D` ([`BudgetKind::MaxIx`]) and minimize `I_X` subject to
//! `I_Y >= D̂` ([`BudgetKind::MinIy`]).

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{InfoValue, NodeInfoTable};
use crate::quadtree::{self, NodeId, TreeSelection, DEFAULT_ENUMERATION_CAP};

mod bnb;
pub mod closure;
mod exhaustive;
mod lagrangian;
mod relax;
mod unit_dp;

pub use bnb::solve_milp;
pub use closure::{Assignment, FEASIBILITY_SLACK};
pub use exhaustive::solve_exhaustive;
pub use lagrangian::solve_lagrangian;
pub use relax::{solve_lp, solve_relaxation, LpSolution};

use closure::{fix_collapsed, fix_expanded, ClosureProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Milp,
    Relax,
    Lagrangian,
    Exhaustive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Milp => "milp",
            Mode::Relax => "relax",
            Mode::Lagrangian => "lagrangian",
            Mode::Exhaustive => "exhaustive",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "milp" => Ok(Mode::Milp),
            "relax" => Ok(Mode::Relax),
            "lagrangian" => Ok(Mode::Lagrangian),
            "exhaustive" => Ok(Mode::Exhaustive),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    /// Maximize `I_Y` subject to `I_X <= budget`.
    MaxIx,
    /// Minimize `I_X` subject to `I_Y >= budget`.
    MinIy,
}

impl BudgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BudgetKind::MaxIx => "max_ix",
            BudgetKind::MinIy => "min_iy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub mode: Mode,
    pub budget_kind: BudgetKind,
    pub budget: f64,
    /// Only used by [`Mode::Lagrangian`].
    pub beta: f64,
    /// Absolute optimality gap in nats.
    pub gap_tol: f64,
    /// Branch-and-bound node cap.
    pub node_limit: u64,
    /// Deepest world the exhaustive oracle accepts.
    pub enumeration_cap: u8,
    /// Let the exact solver use the integer-unit table instead of branching
    /// when every `ΔI_X` is a multiple of a common unit.
    pub unit_dp: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: Mode::Milp,
            budget_kind: BudgetKind::MaxIx,
            budget: 0.0,
            beta: 1.0,
            gap_tol: 1e-9,
            node_limit: 1_000_000,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            unit_dp: true,
        }
    }
}

impl SolveConfig {
    pub fn new(mode: Mode, budget_kind: BudgetKind, budget: f64) -> Self {
        SolveConfig {
            mode,
            budget_kind,
            budget,
            ..SolveConfig::default()
        }
    }

    pub fn lagrangian(beta: f64) -> Self {
        SolveConfig {
            mode: Mode::Lagrangian,
            beta,
            ..SolveConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(Error::Config(format!("budget must be >= 0, got {}", self.budget)));
        }
        if self.mode == Mode::Lagrangian && !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.gap_tol >= 0.0) {
            return Err(Error::Config(format!("gap tolerance must be >= 0, got {}", self.gap_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    FeasibleHeuristic,
    Infeasible,
    NodeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::FeasibleHeuristic => "feasible_heuristic",
            Status::Infeasible => "infeasible",
            Status::NodeLimit => "node_limit",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub explored_nodes: u64,
    pub dp_evaluations: u64,
    /// Wall time; not serialized so that outputs stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

/// Extra diagnostics of the relaxation solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    /// Optimal value of the LP relaxation, in the formulation's objective.
    pub lp_value: f64,
    /// Number of nodes with a fractional LP value.
    pub fractional_nodes: usize,
    /// Precedence violations cleared after truncation.
    pub repaired_pairs: usize,
    /// Whether the plain `>= 0.5` truncation meets the budget or threshold.
    pub truncation_within_budget: bool,
    /// Whether the reported tree differs from the plain truncation because
    /// the truncation exceeded an `I_X` budget.
    pub rounded_down: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub z: TreeSelection,
    pub info: InfoValue,
    /// Objective of `z`: `I_Y` (max_ix), `I_X` (min_iy) or
    /// `I_Y - I_X / β` (lagrangian).
    pub objective: f64,
    /// Best proven bound on the optimal objective (upper bound when
    /// maximizing, lower bound when minimizing `I_X`).
    pub objective_bound: f64,
    pub status: Status,
    pub stats: SolveStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationReport>,
}

/// Dispatches on `cfg.mode`.
pub fn solve(table: &NodeInfoTable, cfg: &SolveConfig) -> Result<SolveResult> {
    match cfg.mode {
        Mode::Milp => solve_milp(table, cfg),
        Mode::Relax => solve_relaxation(table, cfg),
        Mode::Exhaustive => solve_exhaustive(table, cfg),
        Mode::Lagrangian => {
            cfg.validate()?;
            Ok(solve_lagrangian(table, cfg.beta))
        }
    }
}

/// Objective value of `info` under a budget formulation.
pub fn objective_of(kind: BudgetKind, info: InfoValue) -> f64 {
    match kind {
        BudgetKind::MaxIx => info.i_y,
        BudgetKind::MinIy => info.i_x,
    }
}

/// Whether `info` satisfies the budget with the feasibility slack.
pub fn within_budget(kind: BudgetKind, budget: f64, info: InfoValue) -> bool {
    match kind {
        BudgetKind::MaxIx => info.i_x <= budget + FEASIBILITY_SLACK,
        BudgetKind::MinIy => info.i_y >= budget - FEASIBILITY_SLACK,
    }
}

/// Maps a formulation onto the maximization form used internally.
pub(crate) fn closure_problem(table: &NodeInfoTable, kind: BudgetKind, budget: f64) -> ClosureProblem {
    let dx = table.delta_x_vec();
    let dy = table.delta_y_vec();
    match kind {
        BudgetKind::MaxIx => ClosureProblem::new(dy.to_vec(), dx.to_vec(), budget),
        BudgetKind::MinIy => ClosureProblem::new(
            dx.iter().map(|v| -v).collect(),
            dy.iter().map(|v| -v).collect(),
            -budget,
        ),
    }
}

/// Converts an internal (maximized) value back to the formulation's sign.
pub(crate) fn external_value(kind: BudgetKind, internal: f64) -> f64 {
    match kind {
        BudgetKind::MaxIx => internal,
        BudgetKind::MinIy => -internal,
    }
}

/// Expansion decisions for a subset of nodes, kept consistent with the
/// tree order: expanded nodes have expanded ancestors and collapsed nodes
/// have collapsed descendants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAssignment {
    depth: u8,
    fix: Vec<Assignment>,
}

impl PartialAssignment {
    pub fn free(depth: u8) -> Self {
        PartialAssignment {
            depth,
            fix: vec![Assignment::Free; quadtree::expandable_count(depth)],
        }
    }

    /// The complete assignment matching a valid selection.
    pub fn from_selection(z: &TreeSelection) -> Result<Self> {
        let violations = z.violations();
        if !violations.is_empty() {
            return Err(Error::Precedence(violations.len()));
        }
        Ok(PartialAssignment {
            depth: z.depth(),
            fix: z
                .bits()
                .iter()
                .map(|&b| if b { Assignment::Expanded } else { Assignment::Collapsed })
                .collect(),
        })
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn get(&self, node: NodeId) -> Assignment {
        self.fix[node.flat()]
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.fix
    }

    /// Fixes `node` (and its ancestors) expanded.
    pub fn expand(&mut self, node: NodeId) -> Result<()> {
        self.check(node)?;
        fix_expanded(&mut self.fix, node.flat())
            .map_err(|_| Error::Config(format!("{node:?} conflicts with a collapsed ancestor")))
    }

    /// Fixes `node` (and its descendants) collapsed.
    pub fn collapse(&mut self, node: NodeId) -> Result<()> {
        self.check(node)?;
        fix_collapsed(&mut self.fix, node.flat())
            .map_err(|_| Error::Config(format!("{node:?} conflicts with an expanded descendant")))
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node.level >= self.depth {
            return Err(Error::Level {
                level: node.level,
                depth: self.depth,
            });
        }
        Ok(())
    }
}

fn check_assignment(table: &NodeInfoTable, partial: &PartialAssignment) -> Result<()> {
    if partial.fix.len() != table.expandable() {
        return Err(Error::SelectionSize {
            expected: table.expandable(),
            found: partial.fix.len(),
        });
    }
    Ok(())
}

/// Lagrangian bound on the best completion of `partial` under the budget of
/// `cfg`: an upper bound on `I_Y` (max_ix) or a lower bound on `I_X`
/// (min_iy). Returns `-inf` / `+inf` respectively when no completion meets
/// the budget. The bound is the minimum of the dual over the multiplier and
/// equals the LP relaxation value of the restricted problem.
pub fn lagrangian_bound(
    table: &NodeInfoTable,
    partial: &PartialAssignment,
    cfg: &SolveConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_assignment(table, partial)?;
    let mut problem = closure_problem(table, cfg.budget_kind, cfg.budget);
    let internal = match problem.solve_dual(&partial.fix) {
        closure::DualOutcome::Infeasible => f64::NEG_INFINITY,
        closure::DualOutcome::Integral(c) => c.profit,
        closure::DualOutcome::Fractional { bound, .. } => bound,
    };
    Ok(external_value(cfg.budget_kind, internal))
}

/// Dual function at one multiplier `λ >= 0`; always a valid bound.
pub fn lagrangian_value_at(
    table: &NodeInfoTable,
    partial: &PartialAssignment,
    cfg: &SolveConfig,
    multiplier: f64,
) -> Result<f64> {
    cfg.validate()?;
    check_assignment(table, partial)?;
    if !(multiplier >= 0.0) {
        return Err(Error::Config(format!("multiplier must be >= 0, got {multiplier}")));
    }
    let mut problem = closure_problem(table, cfg.budget_kind, cfg.budget);
    Ok(external_value(
        cfg.budget_kind,
        problem.dual_value(&partial.fix, multiplier),
    ))
}

pub(crate) fn finish(
    table: &NodeInfoTable,
    bits: Vec<bool>,
    kind: BudgetKind,
    bound_internal: f64,
    status: Status,
    stats: SolveStats,
) -> SolveResult {
    let z = TreeSelection::from_bits(table.depth(), bits).expect("solver selections match the table");
    let info = crate::info::selection_info(z.bits(), table);
    SolveResult {
        z,
        info,
        objective: objective_of(kind, info),
        objective_bound: external_value(kind, bound_internal),
        status,
        stats,
        relaxation: None,
    }
}
