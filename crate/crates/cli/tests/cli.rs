use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ibqt::abstraction::AbstractionOutput;
use ibqt::info::build_node_table;
use ibqt::tree_info;

fn ibqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibqt"))
        .args(args)
        .env_remove("IBQT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn flat_map_with_zero_budget_is_one_cell() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "flat.csv", "0.3,0.3\n0.3,0.3\n");
    let o = ibqt(&["abstract", "--input", map.to_str().unwrap(), "--budget-ix", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = AbstractionOutput::from_json(&stdout(&o)).unwrap();
    assert_eq!(out.cells.len(), 1);
    assert_eq!((out.cells[0].row, out.cells[0].col, out.cells[0].size), (0, 0, 2));
    assert_eq!((out.i_x, out.i_y), (0.0, 0.0));
}

#[test]
fn relax_objective_below_milp() {
    for budget in ["1.5", "2.5", "3.5"] {
        let run = |mode: &str| {
            let o = ibqt(&[
                "abstract", "--synthetic", "random", "--seed", "3", "--depth", "4", "--budget-ix", budget, "--mode", mode,
            ]);
            assert_eq!(code(&o), 0);
            AbstractionOutput::from_json(&stdout(&o)).unwrap()
        };
        let exact = run("milp");
        let relax = run("relax");
        assert!(relax.objective <= exact.objective + 1e-9);
        assert!(relax.relaxation.is_some());
    }
}

#[test]
fn output_cells_rebuild_the_reported_tree() {
    let o = ibqt(&["abstract", "--synthetic", "blobs", "--seed", "4", "--depth", "5", "--min-iy", "0.2"]);
    assert_eq!(code(&o), 0);
    let out = AbstractionOutput::from_json(&stdout(&o)).unwrap();
    assert!(out.i_y >= 0.2 - 1e-12);
    let world = ibqt::synthetic::blobs(5, 4).unwrap();
    let z = out.selection().unwrap();
    let v = tree_info(&z, &build_node_table(&world)).unwrap();
    assert!((v.i_x - out.i_x).abs() < 1e-9 && (v.i_y - out.i_y).abs() < 1e-9);
}

#[test]
fn pgm_input_with_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("map.pgm");
    let o = ibqt(&["render", "--synthetic", "blobs", "--seed", "7", "--depth", "6", "--out", pgm.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = ibqt(&["abstract", "--input", pgm.to_str().unwrap(), "--min-iy", "0.2745", "--mode", "milp"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = AbstractionOutput::from_json(&stdout(&o)).unwrap();
    assert!(out.i_y >= 0.2745 - 1e-12);
    assert_eq!(out.status, ibqt::solver::Status::Optimal);
}

#[test]
fn two_point_sweep_is_the_corners() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "map.csv", "0.1,0.9,0.4,0.4\n0.2,0.8,0.4,0.4\n1,0,0.5,0.6\n0,1,0.5,0.6\n");
    let o = ibqt(&["sweep", "--input", map.to_str().unwrap(), "--points", "2"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][3..5], &["0", "0"]);
    assert_eq!(&rows[1][3..5], &["1", "1"]);
}

#[test]
fn multi_mode_sweep() {
    let o = ibqt(&[
        "sweep", "--synthetic", "random", "--seed", "2", "--depth", "3", "--points", "8", "--modes", "milp,relax,lagrangian",
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    let by_mode = |m: &str| -> Vec<Vec<String>> { rows.iter().filter(|r| r[5] == m).cloned().collect() };
    let milp = by_mode("milp");
    let relax = by_mode("relax");
    assert_eq!(milp.len(), 8);
    assert_eq!(relax.len(), 8);
    assert!(!by_mode("lagrangian").is_empty());
    for (e, r) in milp.iter().zip(&relax) {
        assert_eq!(e[0], r[0]);
        let (ey, ry): (f64, f64) = (e[2].parse().unwrap(), r[2].parse().unwrap());
        assert!(ry <= ey + 1e-9);
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["sweep", "--synthetic", "blobs", "--seed", "1", "--depth", "5", "--points", "10"];
    let a = ibqt(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_ibqt"))
        .args(args)
        .env("IBQT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validate_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.csv", "0.5,0.5\n0.5,0.5\n");
    let o = ibqt(&["validate", "--input", flat.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("I(X;Y)=0.000000000000"), "{text}");
    assert!(!text.contains("FAIL"));

    let o = ibqt(&["validate", "--synthetic", "random", "--seed", "8", "--depth", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 6);

    let o = ibqt(&["validate", "--synthetic", "blobs", "--seed", "8", "--depth", "5", "--skip-exhaustive"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("SKIP oracle_max_ix"));
}

#[test]
fn corrupted_inputs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "0.5,1.7\n0.5,0.5\n");
    assert_eq!(code(&ibqt(&["validate", "--input", bad.to_str().unwrap()])), 4);

    write(dir.path(), "y0.csv", "0.5,0.5\n0.5,0.5\n");
    write(dir.path(), "y1.csv", "0.5,0.9\n0.5,0.5\n");
    let manifest = write(dir.path(), "map.json", r#"{"outcomes": ["y0.csv", "y1.csv"]}"#);
    assert_eq!(code(&ibqt(&["validate", "--input", manifest.to_str().unwrap()])), 4);

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&ibqt(&["abstract", "--input", missing.to_str().unwrap(), "--budget-ix", "1"])), 4);

    let odd = write(dir.path(), "odd.csv", "0.1,0.2,0.3\n0.4,0.5,0.6\n0.7,0.8,0.9\n");
    assert_eq!(code(&ibqt(&["abstract", "--input", odd.to_str().unwrap(), "--budget-ix", "1"])), 4);
    let o = ibqt(&["abstract", "--input", odd.to_str().unwrap(), "--budget-ix", "1", "--pad"]);
    assert_eq!(code(&o), 0);
    assert_eq!(AbstractionOutput::from_json(&stdout(&o)).unwrap().side, 4);
}

#[test]
fn usage_errors_exit_2() {
    let base = ["abstract", "--synthetic", "random", "--depth", "2"];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        code(&ibqt(&v))
    };
    assert_eq!(with(&[]), 2);
    assert_eq!(with(&["--budget-ix", "1", "--min-iy", "0.1"]), 2);
    assert_eq!(with(&["--budget-ix", "1", "--mode", "simplex"]), 2);
    assert_eq!(with(&["--budget-ix", "-1"]), 2);
    assert_eq!(with(&["--beta", "2", "--mode", "milp"]), 2);
    assert_eq!(with(&["--budget-ix", "1", "--mode", "lagrangian"]), 2);
    assert_eq!(with(&["--beta", "2", "--bogus"]), 2);
    assert_eq!(code(&ibqt(&["abstract", "--budget-ix", "1"])), 2);
    assert_eq!(code(&ibqt(&["frobnicate"])), 2);
}

#[test]
fn infeasible_threshold_exits_3() {
    let o = ibqt(&["abstract", "--synthetic", "random", "--depth", "3", "--min-iy", "50"]);
    assert_eq!(code(&o), 3);
    let out = AbstractionOutput::from_json(&stdout(&o)).unwrap();
    assert_eq!(out.status, ibqt::solver::Status::Infeasible);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# experiment\nsynthetic = random\nseed = 5\ndepth = 3\nbudget-ix = 2.0\nmode = relax\n",
    );
    let c = cfg.to_str().unwrap();
    let from_file = AbstractionOutput::from_json(&stdout(&ibqt(&["abstract", "--config", c]))).unwrap();
    assert_eq!(from_file.config.mode, ibqt::solver::Mode::Relax);
    assert_eq!(from_file.config.budget, 2.0);

    let o = ibqt(&["abstract", "--config", c, "--mode", "milp", "--min-iy", "0.05"]);
    assert_eq!(code(&o), 0);
    let overridden = AbstractionOutput::from_json(&stdout(&o)).unwrap();
    assert_eq!(overridden.config.mode, ibqt::solver::Mode::Milp);
    assert_eq!(overridden.config.budget_kind, ibqt::solver::BudgetKind::MinIy);

    let bad = write(dir.path(), "bad.cfg", "colour = blue\n");
    assert_eq!(code(&ibqt(&["abstract", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn render_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("a.json");
    let o = ibqt(&[
        "abstract", "--synthetic", "blobs", "--seed", "2", "--depth", "4", "--budget-ix", "1.5", "--out",
        json.to_str().unwrap(), "--render", dir.path().join("a.pgm").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let pgm = fs::read(dir.path().join("a.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n16 16\n255\n"));

    let ppm = dir.path().join("b.ppm");
    let o = ibqt(&[
        "render", "--abstraction", json.to_str().unwrap(), "--out", ppm.to_str().unwrap(), "--scale", "3", "--border",
        "ff0000",
    ]);
    assert_eq!(code(&o), 0);
    let bytes = fs::read(&ppm).unwrap();
    assert!(bytes.starts_with(b"P6\n48 48\n255\n"));
    assert_eq!(bytes.len(), b"P6\n48 48\n255\n".len() + 48 * 48 * 3);

    let o = ibqt(&["render", "--abstraction", json.to_str().unwrap(), "--out", ppm.to_str().unwrap(), "--border", "red"]);
    assert_eq!(code(&o), 2);
    let o = ibqt(&["render", "--abstraction", dir.path().join("nope.json").to_str().unwrap(), "--out", "x.pgm"]);
    assert_eq!(code(&o), 4);
}
