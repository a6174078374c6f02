use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dbar(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dbar"))
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Data rows of a CSV file as maps from column name to cell.
fn rows(path: &Path) -> Vec<Vec<(String, String)>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines
        .map(|l| cols.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn cell(row: &[(String, String)], name: &str) -> f64 {
    row.iter().find(|(k, _)| k == name).unwrap().1.parse().unwrap()
}

const SMALL_FLOW: &str = r#"
[run]
command = "flow"
seed = 11
[grid]
n_s = 16
n_theta = 16
[init]
kind = "random_frame"
noise = 0.05
[flow]
t_max = 0.02
"#;

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&dbar(a.path(), SMALL_FLOW, &["--quiet"])), 0);
    assert_eq!(code(&dbar(b.path(), SMALL_FLOW, &["--quiet"])), 0);
    for name in ["trace.csv", "field_final.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn seed_flag_overrides_config_and_is_echoed() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    dbar(a.path(), SMALL_FLOW, &["--quiet"]);
    dbar(b.path(), SMALL_FLOW, &["--quiet", "--seed", "12"]);
    let x = fs::read_to_string(a.path().join("out/field_final.csv")).unwrap();
    let y = fs::read_to_string(b.path().join("out/field_final.csv")).unwrap();
    assert_ne!(x, y);
    assert!(y.contains("# seed = 12"));
}

#[test]
fn alpha_below_one_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let o = dbar(d.path(), "[run]\ncommand = \"flow\"\n[model]\nalpha = 0.5\n", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn unknown_keys_and_values_are_config_errors() {
    let d = TempDir::new().unwrap();
    let o = dbar(d.path(), "[run]\ncommand = \"flow\"\n[grid]\nsize = 4\n", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("size"));
    let o = dbar(d.path(), "[run]\ncommand = \"flow\"\n[flow]\nscheme = \"leapfrog\"\n", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("flow.scheme"));
    let o = dbar(d.path(), "[run]\ncommand = \"flow\"\n[model]\ntarget = \"klein_bottle\"\n", &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let d = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dbar"))
        .args(["--config", "/nonexistent/run.toml", "--output"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn flat_identity_converges_at_once() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
[run]
command = "flow"
[model]
source = "flat_torus"
target = "flat_torus"
[grid]
n_s = 16
n_theta = 16
[init]
kind = "identity"
"#;
    let o = dbar(d.path(), cfg, &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("status=converged"));
    let trace = rows(&d.path().join("out/trace.csv"));
    assert_eq!(trace.len(), 1);
    assert!(cell(&trace[0], "E_plus").abs() < 1e-14);
}

#[test]
fn holomorphic_frame_stays_put() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
[run]
command = "flow"
[grid]
n_s = 16
n_theta = 16
order = "fourth"
[flow]
t_max = 0.05
"#;
    assert_eq!(code(&dbar(d.path(), cfg, &["--quiet"])), 0);
    let trace = rows(&d.path().join("out/trace.csv"));
    let (first, last) = (&trace[0], trace.last().unwrap());
    assert!(cell(first, "E_plus") < 1e-4);
    assert!(cell(last, "E_plus") <= cell(first, "E_plus") * (1.0 + 1e-9));
    assert!((cell(last, "E") - cell(first, "E")).abs() < 1e-4 * cell(first, "E"));
}

#[test]
fn blow_up_exits_five_with_snapshots() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
[run]
command = "flow"
[grid]
n_s = 16
n_theta = 16
[flow]
blowup_threshold = 0.5
window_n = 9
"#;
    let o = dbar(d.path(), cfg, &[]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stdout).contains("status=blow_up"));
    let out = d.path().join("out");
    assert!(out.join("snapshot_000.csv").exists());
    assert!(out.join("rescaled_000.csv").exists());
}

#[test]
fn verify_passes_and_sign_flip_fails() {
    let d = TempDir::new().unwrap();
    let o = dbar(d.path(), "[run]\ncommand = \"verify\"\n", &[]);
    assert_eq!(code(&o), 0);
    let report = rows(&d.path().join("out/verify.csv"));
    assert!(report.len() > 20);
    assert!(report.iter().all(|r| r.iter().any(|(k, v)| k == "pass" && v == "pass")));
    let o = dbar(
        d.path(),
        "[run]\ncommand = \"verify\"\n[verify]\nfixture = \"sign_flip\"\n",
        &["--quiet"],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn basin_and_frames_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = "[run]\ncommand = \"basin\"\nseed = 3\n[basin]\ncount = 1\nt_max = 10.0\n";
    assert_eq!(code(&dbar(a.path(), cfg, &["--quiet"])), 0);
    assert_eq!(code(&dbar(b.path(), cfg, &["--quiet"])), 0);
    let x = fs::read(a.path().join("out/basin.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("out/basin.csv")).unwrap());
    let r = rows(&a.path().join("out/basin.csv"));
    assert_eq!(r.len(), 1);
    assert!((cell(&r[0], "c_final") - 1.0).abs() < 1e-6);

    let cfg = "[run]\ncommand = \"frames\"\n[frames]\nrandom = true\nt_max = 0.5\nrecord_every = 100\n";
    assert_eq!(code(&dbar(a.path(), cfg, &["--quiet"])), 0);
    let r = rows(&a.path().join("out/frames.csv"));
    assert_eq!(r.len(), 6);
    let c: Vec<f64> = r.iter().map(|row| cell(row, "c")).collect();
    assert!(c.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn spectrum_writes_one_row_per_case() {
    let d = TempDir::new().unwrap();
    let cfg = "[run]\ncommand = \"spectrum\"\n[spectrum]\nradii = [1.0, 2.0]\nresolutions = [32]\n";
    assert_eq!(code(&dbar(d.path(), cfg, &["--quiet"])), 0);
    let r = rows(&d.path().join("out/spectrum.csv"));
    assert_eq!(r.len(), 2);
    assert!((cell(&r[0], "lambda1") - 2.0).abs() < 0.05);
    assert!((cell(&r[1], "lambda1") / cell(&r[0], "lambda1") - 0.25).abs() < 1e-9);
    let o = dbar(d.path(), "[run]\ncommand = \"spectrum\"\n[spectrum]\nresolutions = [8]\n", &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn field_dump_restarts_a_run() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&dbar(d.path(), SMALL_FLOW, &["--quiet"])), 0);
    let dump = d.path().join("saved.csv");
    fs::rename(d.path().join("out/field_final.csv"), &dump).unwrap();
    let cfg = format!(
        "[run]\ncommand = \"flow\"\n[grid]\nn_s = 16\nn_theta = 16\n[init]\nkind = \"file\"\npath = {:?}\n[flow]\nt_max = 0.01\n",
        dump.display().to_string()
    );
    assert_eq!(code(&dbar(d.path(), &cfg, &["--quiet"])), 0);
    let wrong = cfg.replace("n_s = 16", "n_s = 32");
    assert_eq!(code(&dbar(d.path(), &wrong, &["--quiet"])), 2);
}
