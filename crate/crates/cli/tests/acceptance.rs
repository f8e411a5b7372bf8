//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ibqt::info::{build_node_table, direct_mi, h_x, mi_xy, tree_info};
use ibqt::quadtree::{enumerate_all_selections, NodeId, TreeSelection};
use ibqt::solver::{solve, solve_exhaustive, solve_lp, solve_milp, BudgetKind, Mode, SolveConfig, Status};
use ibqt::sweep::{self, default_betas, sweep_budget, SweepOptions};
use ibqt::synthetic::{blobs, random_world, RandomWorld};
use ibqt::GridWorld;

const TOL: f64 = 1e-9;
const DPI_TOL: f64 = 1e-12;
const FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    Verdict { ok, detail }
}

fn oracle_worlds() -> Vec<GridWorld> {
    let mut out = Vec::new();
    for depth in 1..=3u8 {
        for seed in 0..50 {
            out.push(random_world(RandomWorld::new(depth), 1000 * depth as u64 + seed).unwrap());
        }
    }
    out
}

fn budget_for(w: &GridWorld, kind: BudgetKind, f: f64) -> f64 {
    match kind {
        BudgetKind::MaxIx => f * h_x(w),
        BudgetKind::MinIy => f * mi_xy(w),
    }
}

fn oracle(worlds: &[GridWorld]) -> Verdict {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut solves = 0;
    for w in worlds {
        let table = build_node_table(w);
        for kind in [BudgetKind::MaxIx, BudgetKind::MinIy] {
            for f in FRACTIONS {
                let cfg = SolveConfig::new(Mode::Milp, kind, budget_for(w, kind, f));
                let exact = solve_milp(&table, &cfg).unwrap();
                let brute = solve_exhaustive(&table, &SolveConfig { mode: Mode::Exhaustive, ..cfg }).unwrap();
                solves += 1;
                let gap = (exact.objective - brute.objective).abs();
                worst = worst.max(gap);
                if exact.status != brute.status || !(gap <= TOL) {
                    failures += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!("{solves} solves, {failures} mismatches, max |diff| {worst:.2e}, {elapsed:.2?}"),
    )
}

fn telescoping_and_dpi() -> (Verdict, Verdict) {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut trees = 0;
    let mut dpi_violations = 0;
    for seed in 0..10 {
        let w = random_world(RandomWorld::new(2), 2000 + seed).unwrap();
        let table = build_node_table(&w);
        let cap = mi_xy(&w);
        for z in enumerate_all_selections(2).unwrap() {
            let tele = tree_info(&z, &table).unwrap();
            let direct = direct_mi(&z, &w).unwrap();
            worst = worst.max((tele.i_x - direct.i_x).abs()).max((tele.i_y - direct.i_y).abs());
            trees += 1;
            if !(tele.i_y <= tele.i_x + DPI_TOL && tele.i_y <= cap + DPI_TOL) {
                dpi_violations += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    (
        verdict(
            trees == 170 && worst <= TOL && elapsed < Duration::from_secs(5),
            format!("{trees} trees, max |diff| {worst:.2e}, {elapsed:.2?}"),
        ),
        verdict(dpi_violations == 0, format!("{trees} trees, {dpi_violations} violations")),
    )
}

fn lagrangian_self_optimality() -> Verdict {
    let betas = default_betas();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for seed in 0..10 {
        let w = random_world(RandomWorld::new(3), 3000 + seed).unwrap();
        let table = build_node_table(&w);
        for &beta in &betas {
            let tb = solve(&table, &SolveConfig::lagrangian(beta)).unwrap();
            let cfg = SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, tb.info.i_x);
            let exact = solve_milp(&table, &cfg).unwrap();
            worst = worst.max((exact.info.i_y - tb.info.i_y).abs());
            checks += 1;
        }
    }
    verdict(worst <= TOL, format!("{checks} betas x worlds, max |diff| {worst:.2e}"))
}

fn sandwich(worlds: &[GridWorld]) -> Verdict {
    let mut violations = 0;
    let mut repairs = 0;
    let mut instances = 0;
    for w in worlds {
        let table = build_node_table(w);
        for kind in [BudgetKind::MaxIx, BudgetKind::MinIy] {
            for f in FRACTIONS {
                let d = budget_for(w, kind, f);
                let exact = solve_milp(&table, &SolveConfig::new(Mode::Milp, kind, d)).unwrap();
                let relax = solve(&table, &SolveConfig::new(Mode::Relax, kind, d)).unwrap();
                let lp = solve_lp(&table, kind, d).unwrap().value;
                let report = relax.relaxation.unwrap();
                instances += 1;
                repairs += report.repaired_pairs;
                // min_iy minimizes I_X: the LP is a lower bound and a truncation
                // meeting the threshold an upper bound.
                let ok = match kind {
                    BudgetKind::MaxIx => {
                        relax.objective <= exact.objective + TOL && exact.objective <= lp + TOL
                    }
                    BudgetKind::MinIy => {
                        lp <= exact.objective + TOL
                            && (!report.truncation_within_budget || exact.objective <= relax.objective + TOL)
                    }
                };
                if !ok {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0 && repairs == 0,
        format!("{instances} instances, {violations} violations, {repairs} repaired pairs"),
    )
}

fn kink() -> Verdict {
    let mut worlds = Vec::new();
    for seed in 0..5 {
        let params = RandomWorld {
            uniform_prior: true,
            ..RandomWorld::new(4)
        };
        worlds.push((true, random_world(params, 4000 + seed).unwrap()));
        worlds.push((true, blobs(5, seed).unwrap()));
        worlds.push((false, random_world(RandomWorld::new(4), 4100 + seed).unwrap()));
    }
    let mut failures = Vec::new();
    let mut checked = 0;
    for (i, (sweep_check, w)) in worlds.iter().enumerate() {
        let table = build_node_table(w);
        let root = table.delta_x(NodeId::ROOT);
        if table.delta_y(NodeId::ROOT) <= 0.0 {
            continue;
        }
        checked += 1;
        for d in [0.0, 0.5 * root, root * (1.0 - 1e-9)] {
            let r = solve_milp(&table, &SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, d)).unwrap();
            if r.z != TreeSelection::empty(w.depth()) || r.info.i_y != 0.0 {
                failures.push(format!("world {i}: budget {d} not root-only"));
            }
        }
        let at = solve_milp(&table, &SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, root)).unwrap();
        if at.info.i_x != root {
            failures.push(format!("world {i}: i_x {} at the root budget", at.info.i_x));
        }
        if *sweep_check {
            let out = sweep_budget(w, sweep::DEFAULT_POINTS, Mode::Milp, SweepOptions::default()).unwrap();
            match out.points.iter().find(|p| p.i_x > 0.0) {
                Some(p) if p.i_x == root => {}
                other => failures.push(format!("world {i}: first jump {:?}", other.map(|p| p.i_x))),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} worlds")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty() && checked > 0, detail)
}

fn scale() -> Verdict {
    let w = blobs(7, 7).unwrap();
    let table = build_node_table(&w);
    let h = h_x(&w);
    let mut slowest = Duration::ZERO;
    let mut slowest_relax = Duration::ZERO;
    let mut problems = Vec::new();
    for k in 1..=10 {
        let d = h * k as f64 / 11.0;
        let started = Instant::now();
        let exact = solve_milp(&table, &SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, d)).unwrap();
        let t = started.elapsed();
        slowest = slowest.max(t);
        if exact.status != Status::Optimal || t >= Duration::from_secs(120) {
            problems.push(format!("budget {k}/11: {:?} in {t:.2?}", exact.status));
        }
        let started = Instant::now();
        solve(&table, &SolveConfig::new(Mode::Relax, BudgetKind::MaxIx, d)).unwrap();
        let t = started.elapsed();
        slowest_relax = slowest_relax.max(t);
        if t >= Duration::from_secs(1) {
            problems.push(format!("relax {k}/11 took {t:.2?}"));
        }
    }
    let out = sweep_budget(&w, sweep::DEFAULT_POINTS, Mode::Milp, SweepOptions::default()).unwrap();
    let csv = sweep::to_csv(&out.points);
    let parsed: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    let monotone = parsed.windows(2).all(|p| p[1].0 >= p[0].0 && p[1].1 >= p[0].1);
    if !monotone || parsed.len() != sweep::DEFAULT_POINTS || !out.errors.is_empty() {
        problems.push("sweep csv not monotone or incomplete".into());
    }
    if out.points.iter().any(|p| p.status != Status::Optimal) {
        problems.push("sweep point not optimal".into());
    }
    let detail = format!(
        "{} expandable nodes, slowest milp {slowest:.2?}, slowest relax {slowest_relax:.2?}, sweep {} points{}",
        table.expandable(),
        parsed.len(),
        if problems.is_empty() { String::new() } else { format!(": {}", problems.join("; ")) }
    );
    verdict(problems.is_empty(), detail)
}

fn run_twice(dir: &Path, args: &[&str], files: &[&str]) -> Result<(), String> {
    let mut seen: Vec<Vec<Vec<u8>>> = Vec::new();
    for _ in 0..2 {
        for f in files {
            let _ = fs::remove_file(dir.join(f));
        }
        let o = Command::new(env!("CARGO_BIN_EXE_ibqt"))
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{} exited {:?}", args[0], o.status.code()));
        }
        let mut outputs = vec![o.stdout];
        for f in files {
            outputs.push(fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
        }
        seen.push(outputs);
    }
    if seen[0] == seen[1] {
        Ok(())
    } else {
        Err(format!("{} output differs between runs", args.join(" ")))
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let map = ["--synthetic", "blobs", "--seed", "7", "--depth", "6"];
    let with = |extra: &[&'static str]| -> Vec<&'static str> {
        let mut v = Vec::new();
        v.push(extra[0]);
        v.extend_from_slice(&map);
        v.extend_from_slice(&extra[1..]);
        v
    };
    let runs: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (with(&["abstract", "--budget-ix", "3.1", "--mode", "milp"]), vec![]),
        (with(&["abstract", "--budget-ix", "3.1", "--mode", "relax"]), vec![]),
        (with(&["abstract", "--min-iy", "0.2", "--mode", "milp"]), vec![]),
        (with(&["abstract", "--beta", "20"]), vec![]),
        (
            with(&["abstract", "--budget-ix", "2", "--out", "a.json", "--render", "a.pgm"]),
            vec!["a.json", "a.pgm"],
        ),
        (with(&["sweep", "--points", "20", "--modes", "milp,relax,lagrangian"]), vec![]),
        (with(&["sweep", "--points", "12", "--kind", "min-iy", "--out", "s.csv"]), vec!["s.csv"]),
        (with(&["validate", "--skip-exhaustive"]), vec![]),
        (with(&["render", "--out", "m.pgm"]), vec!["m.pgm"]),
        (
            vec!["render", "--abstraction", "a.json", "--out", "a.ppm", "--scale", "2", "--border", "00ff00"],
            vec!["a.ppm"],
        ),
    ];
    let mut errors = Vec::new();
    for (args, files) in &runs {
        if let Err(e) = run_twice(d, args, files) {
            errors.push(e);
        }
    }
    if let Err(e) = run_twice(
        d,
        &["validate", "--synthetic", "random", "--seed", "3", "--depth", "3"],
        &[],
    ) {
        errors.push(e);
    }
    let detail = if errors.is_empty() {
        format!("{} commands run twice", runs.len() + 1)
    } else {
        errors.join("; ")
    };
    verdict(errors.is_empty(), detail)
}

fn main() -> ExitCode {
    let worlds = oracle_worlds();
    let (tele, dpi) = telescoping_and_dpi();
    type Check<'a> = Box<dyn FnOnce() -> Verdict + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle_equivalence", Box::new(|| oracle(&worlds))),
        ("telescoping_identity", Box::new(|| tele)),
        ("dpi_suite", Box::new(|| dpi)),
        ("lagrangian_self_optimality", Box::new(lagrangian_self_optimality)),
        ("bound_sandwich", Box::new(|| sandwich(&worlds))),
        ("root_jump", Box::new(kink)),
        ("scale", Box::new(scale)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        println!("{} {name}: {}", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        if !v.ok {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
