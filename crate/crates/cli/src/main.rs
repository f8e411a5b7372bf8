//! `ibqt`: information-bottleneck quadtree abstractions from the command line.
//!
//! Exit codes: 0 ok, 1 invariant failure, 2 usage, 3 infeasible, 4 I/O or
//! input error.

mod config;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ibqt::abstraction::{full_resolution, render, render_cells, RenderOptions};
use ibqt::grid::{load_grid, GridFormat, LoadOptions};
use ibqt::solver::{self, BudgetKind, Mode, SolveConfig, Status};
use ibqt::sweep::{self, InfoPlanePoint, PlaneScale, SweepOptions};
use ibqt::synthetic::{self, RandomWorld};
use ibqt::validate::{self, Outcome, ValidateOptions};
use ibqt::{build_node_table, AbstractionOutput, GridWorld};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    Invariant(String),
    Usage(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<ibqt::Error> for CliError {
    fn from(e: ibqt::Error) -> Self {
        use ibqt::Error::*;
        match e {
            Io { .. } | Malformed { .. } | Dimension { .. } | ShapeMismatch { .. } | Weights(_) | Distribution(_) => {
                CliError::Io(e.to_string())
            }
            Level { .. } | SelectionSize { .. } | Precedence(_) | EnumerationCap { .. } | Config(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ibqt", version, about = "Information-bottleneck quadtree abstractions of grid maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for one abstraction and write it as JSON.
    Abstract(AbstractArgs),
    /// Trace the information plane and write a CSV.
    Sweep(SweepArgs),
    /// Run the invariant suite on a map.
    Validate(ValidateArgs),
    /// Paint an abstraction (or a map) as PGM/PPM.
    Render(RenderArgs),
}

#[derive(Args, Debug, Default)]
struct InputArgs {
    /// Map file: .csv (p(y=1|x) matrix), .pgm, or .json manifest.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input format, overriding the extension: csv, pgm or manifest.
    #[arg(long)]
    format: Option<String>,
    /// CSV of non-negative prior weights, normalized to p(x).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Embed non-power-of-two grids in a zero-mass padded square.
    #[arg(long)]
    pad: bool,
    /// Generate a map instead of reading one: blobs or random.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadtree depth of a synthetic map (side 2^depth).
    #[arg(long)]
    depth: Option<u8>,
    /// key = value file mirroring the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    /// milp, relax, lagrangian or exhaustive.
    #[arg(long)]
    mode: Option<String>,
    /// Absolute optimality gap in nats.
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Branch-and-bound node cap.
    #[arg(long)]
    node_limit: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct PaintArgs {
    /// Pixels per finest cell.
    #[arg(long)]
    scale: Option<u32>,
    /// Cell border color as RRGGBB hex; implies PPM output.
    #[arg(long)]
    border: Option<String>,
    /// Outcome index whose probability sets the gray level.
    #[arg(long)]
    outcome: Option<usize>,
}

#[derive(Args, Debug)]
struct AbstractArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Maximize I(T;Y) subject to I(T;X) <= D.
    #[arg(long, value_name = "D")]
    budget_ix: Option<f64>,
    /// Minimize I(T;X) subject to I(T;Y) >= D.
    #[arg(long, value_name = "D")]
    min_iy: Option<f64>,
    /// Maximize I(T;Y) - I(T;X) / beta.
    #[arg(long)]
    beta: Option<f64>,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the abstraction to this PGM/PPM path.
    #[arg(long)]
    render: Option<PathBuf>,
    #[command(flatten)]
    paint: PaintArgs,
    /// Print the solve time to stderr.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Budgets per budgeted mode.
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated modes; lagrangian sweeps beta instead of the budget.
    #[arg(long)]
    modes: Option<String>,
    /// Budget formulation: max-ix or min-iy.
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated beta values for lagrangian sweeps.
    #[arg(long)]
    betas: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the sweep time to stderr.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Check sampled trees only and skip the exhaustive oracle.
    #[arg(long)]
    skip_exhaustive: bool,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Abstraction JSON written by `abstract`; without it the map itself is
    /// rendered.
    #[arg(long)]
    abstraction: Option<PathBuf>,
    /// Image destination (.pgm or .ppm).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    paint: PaintArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Abstract(a) => cmd_abstract(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ibqt: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_config(input: &InputArgs) -> CliResult<Config> {
    match &input.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn load_world(input: &InputArgs, cfg: &Config) -> CliResult<GridWorld> {
    let synthetic_kind: Option<String> = cfg.pick(input.synthetic.clone(), "synthetic")?;
    let path: Option<PathBuf> = cfg.pick(input.input.clone(), "input")?;
    let from_flags = input.synthetic.is_some() || input.input.is_some();
    // A source given on the command line replaces the config's source.
    let (synthetic_kind, path) = if from_flags {
        (input.synthetic.clone(), input.input.clone())
    } else {
        (synthetic_kind, path)
    };
    match (synthetic_kind, path) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --input or --synthetic, not both".into())),
        (None, None) => Err(CliError::Usage("an --input map or --synthetic generator is required".into())),
        (Some(kind), None) => {
            let seed = cfg.pick(input.seed, "seed")?.unwrap_or(0);
            let depth = cfg.pick(input.depth, "depth")?.unwrap_or(5);
            if depth > ibqt::quadtree::MAX_DEPTH {
                return Err(CliError::Usage(format!("depth {depth} exceeds {}", ibqt::quadtree::MAX_DEPTH)));
            }
            match kind.as_str() {
                "blobs" => Ok(synthetic::blobs(depth, seed)?),
                "random" => Ok(synthetic::random_world(RandomWorld::new(depth), seed)?),
                other => Err(CliError::Usage(format!("unknown synthetic generator {other:?} (blobs, random)"))),
            }
        }
        (None, Some(path)) => {
            let format = match cfg.pick(input.format.clone(), "format")? {
                Some(f) => parse_format(&f)?,
                None => GridFormat::from_path(&path).map_err(|e| CliError::Usage(e.to_string()))?,
            };
            let weights: Option<PathBuf> = cfg.pick(input.weights.clone(), "weights")?;
            let options = LoadOptions {
                pad: input.pad || cfg.flag("pad")?,
            };
            Ok(load_grid(&path, format, weights.as_deref(), options)?)
        }
    }
}

fn parse_format(s: &str) -> CliResult<GridFormat> {
    match s {
        "csv" => Ok(GridFormat::Csv),
        "pgm" => Ok(GridFormat::Pgm),
        "manifest" | "json" => Ok(GridFormat::Manifest),
        other => Err(CliError::Usage(format!("unknown format {other:?} (csv, pgm, manifest)"))),
    }
}

fn parse_mode(s: &str) -> CliResult<Mode> {
    s.parse::<Mode>().map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_kind(s: &str) -> CliResult<BudgetKind> {
    match s {
        "max-ix" | "max_ix" => Ok(BudgetKind::MaxIx),
        "min-iy" | "min_iy" => Ok(BudgetKind::MinIy),
        other => Err(CliError::Usage(format!("unknown budget kind {other:?} (max-ix, min-iy)"))),
    }
}

fn parse_color(s: &str) -> CliResult<[u8; 3]> {
    let hex = s.trim_start_matches('#');
    if hex.len() != 6 {
        return Err(CliError::Usage(format!("border color {s:?} is not RRGGBB")));
    }
    let byte = |i: usize| {
        u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| CliError::Usage(format!("border color {s:?} is not RRGGBB")))
    };
    Ok([byte(0)?, byte(2)?, byte(4)?])
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::Usage(format!("bad {what} {v:?}"))))
        .collect()
}

fn paint_options(paint: &PaintArgs, cfg: &Config) -> CliResult<RenderOptions> {
    let defaults = RenderOptions::default();
    let border: Option<String> = cfg.pick(paint.border.clone(), "border")?;
    Ok(RenderOptions {
        scale: cfg.pick(paint.scale, "scale")?.unwrap_or(defaults.scale),
        border: border.as_deref().map(parse_color).transpose()?,
        outcome: cfg.pick(paint.outcome, "outcome")?.unwrap_or(defaults.outcome),
    })
}

fn solver_defaults(solver: &SolverArgs, cfg: &Config, base: SolveConfig) -> CliResult<SolveConfig> {
    let gap_tol = cfg.pick(solver.gap_tol, "gap-tol")?.unwrap_or(base.gap_tol);
    let node_limit = cfg.pick(solver.node_limit, "node-limit")?.unwrap_or(base.node_limit);
    Ok(SolveConfig {
        gap_tol,
        node_limit,
        ..base
    })
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

/// Which of `--budget-ix`, `--min-iy`, `--beta` applies, after merging with
/// the config file.
fn budget_choice(a: &AbstractArgs, cfg: &Config) -> CliResult<(Option<f64>, Option<f64>, Option<f64>)> {
    let flags = (a.budget_ix, a.min_iy, a.beta);
    let chosen = if flags.0.is_some() || flags.1.is_some() || flags.2.is_some() {
        flags
    } else {
        (cfg.get("budget-ix")?, cfg.get("min-iy")?, cfg.get("beta")?)
    };
    let count = [chosen.0, chosen.1, chosen.2].iter().filter(|v| v.is_some()).count();
    if count != 1 {
        return Err(CliError::Usage(
            "give exactly one of --budget-ix, --min-iy, --beta".into(),
        ));
    }
    Ok(chosen)
}

fn cmd_abstract(a: AbstractArgs) -> CliResult<()> {
    let cfg = load_config(&a.input)?;
    let world = load_world(&a.input, &cfg)?;
    let mode_flag: Option<String> = cfg.pick(a.solver.mode.clone(), "mode")?;
    let mode = mode_flag.as_deref().map(parse_mode).transpose()?;
    let (budget_ix, min_iy, beta) = budget_choice(&a, &cfg)?;

    let base = match (budget_ix, min_iy, beta) {
        (_, _, Some(b)) => {
            if mode.is_some_and(|m| m != Mode::Lagrangian) {
                return Err(CliError::Usage("--beta requires --mode lagrangian".into()));
            }
            SolveConfig::lagrangian(b)
        }
        (Some(d), _, _) | (_, Some(d), _) => {
            let kind = if budget_ix.is_some() { BudgetKind::MaxIx } else { BudgetKind::MinIy };
            let mode = mode.unwrap_or(Mode::Milp);
            if mode == Mode::Lagrangian {
                return Err(CliError::Usage("--mode lagrangian takes --beta, not a budget".into()));
            }
            SolveConfig::new(mode, kind, d)
        }
        _ => unreachable!("exactly one budget"),
    };
    let solve_cfg = solver_defaults(&a.solver, &cfg, base)?;
    solve_cfg.validate()?;

    let started = Instant::now();
    let table = build_node_table(&world);
    let result = solver::solve(&table, &solve_cfg)?;
    if a.timings {
        eprintln!("solve_seconds={:.6}", started.elapsed().as_secs_f64());
    }
    let output = AbstractionOutput::new(&world, &table, &result, solve_cfg);
    let out: Option<PathBuf> = cfg.pick(a.out.clone(), "out")?;
    write_output(out.as_deref(), &output.to_json())?;
    let render_path: Option<PathBuf> = cfg.pick(a.render.clone(), "render")?;
    if let Some(path) = render_path {
        render(&output, &path, paint_options(&a.paint, &cfg)?)?;
    }
    if result.status == Status::Infeasible {
        return Err(CliError::Infeasible(format!(
            "no tree meets the {} budget {}",
            solve_cfg.budget_kind.as_str(),
            solve_cfg.budget
        )));
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let cfg = load_config(&a.input)?;
    let world = load_world(&a.input, &cfg)?;
    let points = cfg.pick(a.points, "points")?.unwrap_or(sweep::DEFAULT_POINTS);
    let modes_text: Option<String> = cfg.pick(a.modes.clone(), "modes")?;
    let mode_text: Option<String> = cfg.pick(a.solver.mode.clone(), "mode")?;
    let modes: Vec<Mode> = match (modes_text, mode_text) {
        (Some(list), _) => parse_list::<String>(&list, "mode")?
            .iter()
            .map(|m| parse_mode(m))
            .collect::<CliResult<_>>()?,
        (None, Some(m)) => vec![parse_mode(&m)?],
        (None, None) => vec![Mode::Milp],
    };
    if modes.is_empty() {
        return Err(CliError::Usage("--modes is empty".into()));
    }
    let kind_text: Option<String> = cfg.pick(a.kind.clone(), "kind")?;
    let kind = kind_text.as_deref().map(parse_kind).transpose()?.unwrap_or(BudgetKind::MaxIx);
    let betas_text: Option<String> = cfg.pick(a.betas.clone(), "betas")?;
    let betas = match betas_text {
        Some(list) => parse_list::<f64>(&list, "beta")?,
        None => sweep::default_betas(),
    };
    let base = solver_defaults(&a.solver, &cfg, SolveConfig::default())?;
    let options = SweepOptions {
        budget_kind: kind,
        gap_tol: base.gap_tol,
        node_limit: base.node_limit,
        threads: sweep::threads_from_env(),
    };

    let started = Instant::now();
    let table = build_node_table(&world);
    let scale = PlaneScale::of(&world);
    let mut all: Vec<InfoPlanePoint> = Vec::new();
    for mode in modes {
        if mode == Mode::Lagrangian {
            all.extend(sweep::sweep_beta_with(&table, scale, &betas, options.threads)?);
        } else {
            let outcome = sweep::sweep_budget_with(&table, scale, points, mode, options)?;
            if let Some((_, e)) = outcome.errors.into_iter().next() {
                return Err(e.into());
            }
            all.extend(outcome.points);
        }
    }
    if a.timings {
        eprintln!("sweep_seconds={:.6}", started.elapsed().as_secs_f64());
    }
    let out: Option<PathBuf> = cfg.pick(a.out.clone(), "out")?;
    write_output(out.as_deref(), &sweep::to_csv(&all))
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let cfg = load_config(&a.input)?;
    let world = load_world(&a.input, &cfg)?;
    let options = ValidateOptions {
        skip_exhaustive: a.skip_exhaustive || cfg.flag("skip-exhaustive")?,
        ..ValidateOptions::default()
    };
    let report = validate::run(&world, options)?;
    let mut text = format!(
        "depth={} H(X)={:.12} I(X;Y)={:.12}\n",
        world.depth(),
        report.h_x,
        report.mi_xy
    );
    for c in &report.checks {
        let tag = match c.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        text.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
    }
    write_output(None, &text)?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.outcome == Outcome::Fail)
            .map(|c| c.name)
            .collect();
        Err(CliError::Invariant(failed.join(", ")))
    }
}

fn cmd_render(a: RenderArgs) -> CliResult<()> {
    let cfg = load_config(&a.input)?;
    let out: Option<PathBuf> = cfg.pick(a.out.clone(), "out")?;
    let out = out.ok_or_else(|| CliError::Usage("render needs --out".into()))?;
    let options = paint_options(&a.paint, &cfg)?;
    let abstraction: Option<PathBuf> = cfg.pick(a.abstraction.clone(), "abstraction")?;
    match abstraction {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let output = AbstractionOutput::from_json(&text)?;
            output.selection().map_err(|e| CliError::Io(e.to_string()))?;
            render(&output, &out, options)?;
        }
        None => {
            let world = load_world(&a.input, &cfg)?;
            render_cells(world.side() as u32, &full_resolution(&world), &out, options)?;
        }
    }
    Ok(())
}
