use std::fs;
use std::path::Path;
use std::process::Command;

fn solve(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_solve")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

#[test]
fn zero_iterations_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(&["--adapt-max", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("adapt_max"));
}

#[test]
fn bad_settings_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(solve(&["--alpha", "2.5"], dir.path()).status.code(), Some(2));
    assert_eq!(solve(&["--set", "colour=blue"], dir.path()).status.code(), Some(2));
    assert_eq!(solve(&["--z", "0.5,-0.5", "--domain", "lshape"], dir.path()).status.code(), Some(2));
    assert_eq!(solve(&["--domain", "circle"], dir.path()).status.code(), Some(2));
}

#[test]
fn short_run_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# square benchmark\nalpha = 1.0\nadapt_max = 6\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["--config", cfg.to_str().unwrap(), "--vtk-every", "3"];
    for out in [&a, &b] {
        let run = solve(&args, out);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        assert!(String::from_utf8_lossy(&run.stdout).contains("rate_fit_slope"));
    }
    let csv = fs::read(a.join("convergence.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("convergence.csv")).unwrap());
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 7);
    for f in ["solution_003.vtk", "solution_006.vtk", "summary.txt", "manifest.txt"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert!(!a.join("solution_004.vtk").exists());
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("alpha = 1\n") && manifest.contains("adapt_max = 6\n"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "alpha = 1.0\nadapt_max = 9\n").unwrap();
    let run = solve(
        &["--config", cfg.to_str().unwrap(), "--adapt-max", "2", "--element", "mini", "--gx", "-1", "--gy", "0.5"],
        dir.path(),
    );
    assert!(run.status.success());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("adapt_max = 2\n") && manifest.contains("element = mini\n"));
    assert!(manifest.contains("g = -1,0.5\n"));
    assert_eq!(fs::read_to_string(dir.path().join("convergence.csv")).unwrap().lines().count(), 3);
}

#[test]
fn budget_abort_exits_nonzero_but_keeps_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = solve(&["--adapt-max", "10", "--set", "element_budget=40"], dir.path());
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("element budget"));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}
