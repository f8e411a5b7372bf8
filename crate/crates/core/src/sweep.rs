//! Information-plane sweeps over budgets or `β` values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::info::{build_node_table, h_x, mi_xy, InfoValue, NodeInfoTable};
use crate::solver::{self, solve_lagrangian, BudgetKind, Mode, SolveConfig, SolveResult, Status};

pub const DEFAULT_POINTS: usize = 50;
pub const DEFAULT_BETA_COUNT: usize = 40;
pub const CSV_HEADER: &str = "budget,i_x,i_y,i_x_norm,i_y_norm,mode,status";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoPlanePoint {
    /// Budget (`D` or `D̂`) for budget sweeps, `β` for `β` sweeps.
    pub budget: f64,
    pub i_x: f64,
    pub i_y: f64,
    pub i_x_norm: f64,
    pub i_y_norm: f64,
    pub mode: Mode,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub budget_kind: BudgetKind,
    pub gap_tol: f64,
    pub node_limit: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let base = SolveConfig::default();
        SweepOptions {
            budget_kind: BudgetKind::MaxIx,
            gap_tol: base.gap_tol,
            node_limit: base.node_limit,
            threads: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub points: Vec<InfoPlanePoint>,
    /// Budgets whose solve failed, with the error.
    pub errors: Vec<(f64, Error)>,
}

/// Normalization constants of the information plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneScale {
    pub h_x: f64,
    pub mi_xy: f64,
}

impl PlaneScale {
    pub fn of(world: &GridWorld) -> Self {
        PlaneScale {
            h_x: h_x(world),
            mi_xy: mi_xy(world),
        }
    }

    pub fn point(&self, budget: f64, info: InfoValue, mode: Mode, status: Status) -> InfoPlanePoint {
        let ratio = |v: f64, d: f64| if d > 0.0 { v / d } else { 0.0 };
        InfoPlanePoint {
            budget,
            i_x: info.i_x,
            i_y: info.i_y,
            i_x_norm: ratio(info.i_x, self.h_x),
            i_y_norm: ratio(info.i_y, self.mi_xy),
            mode,
            status,
        }
    }
}

/// `n_points` budgets evenly spaced over `[0, H(X)]` (max_ix) or
/// `[0, I(X;Y)]` (min_iy), in increasing order.
pub fn budget_grid(scale: PlaneScale, kind: BudgetKind, n_points: usize) -> Vec<f64> {
    let top = match kind {
        BudgetKind::MaxIx => scale.h_x,
        BudgetKind::MinIy => scale.mi_xy,
    };
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|i| if i + 1 == n_points { top } else { top * i as f64 / last })
        .collect()
}

/// `count` log-spaced values over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Default `β` grid: 40 log-spaced values in `[1e-3, 1e3]`.
pub fn default_betas() -> Vec<f64> {
    log_grid(1e-3, 1e3, DEFAULT_BETA_COUNT)
}

/// Thread count from `IBQT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("IBQT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn run_parallel<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

/// One solve per budget; points are ordered by budget.
pub fn sweep_budget(
    world: &GridWorld,
    n_points: usize,
    mode: Mode,
    options: SweepOptions,
) -> Result<SweepOutcome> {
    let table = build_node_table(world);
    sweep_budget_with(&table, PlaneScale::of(world), n_points, mode, options)
}

pub fn sweep_budget_with(
    table: &NodeInfoTable,
    scale: PlaneScale,
    n_points: usize,
    mode: Mode,
    options: SweepOptions,
) -> Result<SweepOutcome> {
    if n_points < 2 {
        return Err(Error::Config(format!("a sweep needs at least 2 points, got {n_points}")));
    }
    if mode == Mode::Lagrangian {
        return Err(Error::Config("use sweep_beta for the lagrangian mode".into()));
    }
    let budgets = budget_grid(scale, options.budget_kind, n_points);
    let results: Vec<(f64, Result<SolveResult>)> = run_parallel(options.threads, || {
        budgets
            .par_iter()
            .map(|&budget| {
                let cfg = SolveConfig {
                    gap_tol: options.gap_tol,
                    node_limit: options.node_limit,
                    ..SolveConfig::new(mode, options.budget_kind, budget)
                };
                (budget, solver::solve(table, &cfg))
            })
            .collect()
    });
    let mut outcome = SweepOutcome::default();
    for (budget, result) in results {
        match result {
            Ok(r) => outcome.points.push(scale.point(budget, r.info, mode, r.status)),
            Err(e) => outcome.errors.push((budget, e)),
        }
    }
    Ok(outcome)
}

/// One Lagrangian solve per `β`; points ordered by `β`, with repeated
/// `(I_X, I_Y)` pairs dropped after their first occurrence.
pub fn sweep_beta(world: &GridWorld, betas: &[f64]) -> Result<Vec<InfoPlanePoint>> {
    let table = build_node_table(world);
    sweep_beta_with(&table, PlaneScale::of(world), betas, None)
}

pub fn sweep_beta_with(
    table: &NodeInfoTable,
    scale: PlaneScale,
    betas: &[f64],
    threads: Option<usize>,
) -> Result<Vec<InfoPlanePoint>> {
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::Config(format!("beta must be > 0, got {b}")));
    }
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let results: Vec<SolveResult> = run_parallel(threads, || {
        sorted.par_iter().map(|&b| solve_lagrangian(table, b)).collect()
    });
    let mut points: Vec<InfoPlanePoint> = Vec::new();
    for (beta, r) in sorted.iter().zip(results) {
        if points.iter().any(|p| p.i_x == r.info.i_x && p.i_y == r.info.i_y) {
            continue;
        }
        points.push(scale.point(*beta, r.info, Mode::Lagrangian, r.status));
    }
    Ok(points)
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn to_csv(points: &[InfoPlanePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig12(p.budget),
            format_sig12(p.i_x),
            format_sig12(p.i_y),
            format_sig12(p.i_x_norm),
            format_sig12(p.i_y_norm),
            p.mode.as_str(),
            p.status.as_str()
        );
    }
    out
}

pub fn write_csv(path: &Path, points: &[InfoPlanePoint]) -> Result<()> {
    fs::write(path, to_csv(points)).map_err(|e| Error::io(path, e))
}
