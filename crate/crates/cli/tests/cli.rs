//! End-to-end behavior of the `ushape` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ushape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ushape")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ushape(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    ushape(args).status.code().expect("exit code")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn mean_column(path: &Path) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    csv_rows(&text).iter().map(|r| r[2].parse().unwrap()).collect()
}

#[test]
fn kernel_two_by_two_exact() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("k.csv");
    ok(&["kernel", "--L", "2", "--H", "2", "--alpha", "1", "--method", "exact", "--out", path_arg(&csv)]);
    assert_eq!(fs::read_to_string(&csv).unwrap(), "position,x,exact\n1,0.5,0.75\n2,1,0.25\n");
    let doc: Value =
        serde_json::from_str(&ok(&["kernel", "--L", "2", "--H", "2", "--alpha", "1", "--method", "exact", "--format", "json"]))
            .unwrap();
    assert_eq!(doc["row_last_exact"], serde_json::json!(["3/4", "1/4"]));
    assert_eq!(doc["mode"], "exact");
}

#[test]
fn kernel_rational_methods_agree_exactly() {
    let doc: Value =
        serde_json::from_str(&ok(&["kernel", "--L", "8", "--H", "3", "--method", "exact,closed-form", "--format", "json"]))
            .unwrap();
    assert_eq!(doc["max_abs_disagreement"].as_f64(), Some(0.0));
    assert_eq!(doc["rows"][0]["row_last_exact"], doc["rows"][1]["row_last_exact"]);
}

#[test]
fn kernel_csv_uses_forty_digit_decimals() {
    let text = ok(&["kernel", "--L", "3", "--H", "2", "--alpha", "1"]);
    // (M^2)_{3,1} = 11/18
    assert_eq!(csv_rows(&text)[0][2], "0.6111111111111111111111111111111111111111");
}

#[test]
fn kernel_over_the_exact_limit_is_a_tractability_error() {
    let out = ushape(&["kernel", "--L", "100", "--H", "5", "--method", "exact", "--exact-max-L", "64"]);
    assert_eq!(out.status.code(), Some(4));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("64") && msg.contains("float-power"), "{msg}");
}

#[test]
fn density_examples() {
    let flat = csv_rows(&ok(&["density", "--H", "1", "--grid", "16"]));
    assert_eq!(flat.len(), 16);
    assert!(flat.iter().all(|r| r[1] == "1" && r[2] == "0"));

    let deep = csv_rows(&ok(&["density", "--H", "24", "--alpha", "0.5", "--grid", "2048"]));
    assert_eq!(deep.len(), 2049);
    let last = deep.last().unwrap();
    assert_eq!((last[0].as_str(), last[2].as_str()), ("1", "1"));
    assert_eq!(last[3].parse::<f64>().unwrap(), 0.5f64.powi(24));

    let x = (-1.0f64).exp().to_string();
    let pts = format!("{x},0.5,0.75,1");
    let at = csv_rows(&ok(&["density", "--H", "3", "--alpha", "1", "--grid", &pts]));
    assert_eq!(at.len(), 4);
    assert!((at[0][1].parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn density_log_columns_flag_the_endpoint() {
    let rows = csv_rows(&ok(&["density", "--H", "3", "--alpha", "1", "--grid", "4", "--log-floor", "1e-300"]));
    let end = rows.last().unwrap();
    assert_eq!((end[4].as_str(), end[5].as_str()), ("-300", "1"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let (ra, rb) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for (out, raw) in [(&a, &ra), (&b, &rb)] {
        ok(&[
            "simulate", "--L", "24", "--H", "3", "--d", "16", "--seeds", "6", "--base-seed", "9", "--attention",
            "softmax-random", "--theory", "--out", path_arg(out), "--raw-out", path_arg(raw),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&ra).unwrap(), fs::read(&rb).unwrap());
    let raw: Value = serde_json::from_slice(&fs::read(&ra).unwrap()).unwrap();
    let keys: Vec<&String> = raw.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
    assert!(keys.iter().all(|k| (9..15).contains(&k.parse::<u64>().unwrap())));
    let header = fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "position,x,mean,p16,p84,theory");
}

#[test]
fn rope_pair_feeds_compare() {
    let dir = TempDir::new().unwrap();
    let base = ["simulate", "--L", "32", "--H", "3", "--d", "16", "--seeds", "8", "--attention", "softmax-random"];
    let mut files = Vec::new();
    for rope in ["on", "off"] {
        let p = dir.path().join(format!("rope_{rope}.csv"));
        let mut args = base.to_vec();
        args.extend(["--rope", rope, "--out", path_arg(&p)]);
        ok(&args);
        files.push(p);
    }
    let rep: Value = serde_json::from_str(&ok(&["compare", path_arg(&files[0]), path_arg(&files[1])])).unwrap();
    assert_eq!(rep["n_positions"], 32);
    assert!(rep["spearman"].as_f64().unwrap() > 0.8);
}

#[test]
fn more_heads_narrow_the_midpoint_band() {
    let dir = TempDir::new().unwrap();
    let width = |heads: &str| {
        let p = dir.path().join(format!("h{heads}.csv"));
        ok(&[
            "simulate", "--L", "32", "--H", "4", "--d", "64", "--seeds", "48", "--attention", "softmax-random",
            "--init", "scalar:1", "--heads", heads, "--out", path_arg(&p),
        ]);
        let rows = csv_rows(&fs::read_to_string(&p).unwrap());
        let mid = &rows[15];
        mid[4].parse::<f64>().unwrap() - mid[3].parse::<f64>().unwrap()
    };
    assert!(width("16") < width("1"));
}

#[test]
fn compare_profile_with_itself() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("k.csv");
    ok(&["kernel", "--L", "32", "--H", "4", "--out", path_arg(&p)]);
    let rep: Value = serde_json::from_str(&ok(&["compare", path_arg(&p), path_arg(&p), "--gate"])).unwrap();
    assert_eq!(rep["spearman"].as_f64(), Some(1.0));
    assert_eq!(rep["wasserstein1"].as_f64(), Some(0.0));
    assert_eq!(rep["gate"]["passed"], true);
}

#[test]
fn compare_reads_kernel_json_and_density_csv() {
    let dir = TempDir::new().unwrap();
    let (kj, kc) = (dir.path().join("k.json"), dir.path().join("k.csv"));
    ok(&["kernel", "--L", "16", "--H", "3", "--format", "json", "--out", path_arg(&kj)]);
    ok(&["kernel", "--L", "16", "--H", "3", "--method", "float-power", "--out", path_arg(&kc)]);
    let rep: Value = serde_json::from_str(&ok(&["compare", path_arg(&kj), path_arg(&kc)])).unwrap();
    assert_eq!(rep["spearman"].as_f64(), Some(1.0));
    assert!(rep["wasserstein1"].as_f64().unwrap() < 1e-15);

    let (d1, d2) = (dir.path().join("d1.csv"), dir.path().join("d2.json"));
    ok(&["density", "--H", "4", "--alpha", "1/2", "--grid", "64", "--out", path_arg(&d1)]);
    ok(&["density", "--H", "4", "--alpha", "1/2", "--grid", "64", "--format", "json", "--out", path_arg(&d2)]);
    let rep: Value = serde_json::from_str(&ok(&["compare", path_arg(&d1), path_arg(&d2)])).unwrap();
    assert_eq!(rep["wasserstein1"].as_f64(), Some(0.0));
    assert_eq!(rep["n_positions"], 64);
}

#[test]
fn toy_ensemble_passes_the_spearman_gate_against_theory() {
    let dir = TempDir::new().unwrap();
    let (sim, theory) = (dir.path().join("sim.csv"), dir.path().join("theory.csv"));
    ok(&["simulate", "--L", "256", "--H", "8", "--alpha", "1/2", "--seeds", "32", "--out", path_arg(&sim)]);
    ok(&["kernel", "--L", "256", "--H", "8", "--alpha", "1/2", "--method", "float-power", "--out", path_arg(&theory)]);
    assert_eq!(code(&["compare", path_arg(&sim), path_arg(&theory), "--gate-spearman", "0.95"]), 0);
}

#[test]
fn uniform_versus_u_shape_fails_the_gate() {
    let dir = TempDir::new().unwrap();
    let (flat, u) = (dir.path().join("flat.csv"), dir.path().join("u.csv"));
    ok(&["kernel", "--L", "64", "--H", "1", "--alpha", "1", "--out", path_arg(&flat)]);
    ok(&["kernel", "--L", "64", "--H", "8", "--alpha", "1/2", "--out", path_arg(&u)]);
    let out = ushape(&["compare", path_arg(&flat), path_arg(&u), "--gate"]);
    assert_eq!(out.status.code(), Some(5));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["gate"]["passed"], false);
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    ok(&["kernel", "--L", "8", "--H", "2", "--out", path_arg(&a)]);
    ok(&["kernel", "--L", "9", "--H", "2", "--out", path_arg(&b)]);
    assert_eq!(code(&["compare", path_arg(&a), path_arg(&b)]), 3);
}

#[test]
fn sweep_dk_ratio_decreases() {
    let text = ok(&["sweep", "--sweep-dk", "16,64,256", "--L", "16", "--seeds", "64", "--metric", "score-value-ratio"]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    let v: Vec<f64> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    assert_eq!(rows.iter().map(|r| r[3].as_str()).collect::<Vec<_>>(), ["16", "64", "256"]);
}

#[test]
fn sweep_convergence_error_decreases_in_length() {
    let text = ok(&[
        "sweep", "--sweep-H", "1..=6", "--sweep-L", "2048,256,1024,512", "--metric", "convergence-error", "--x",
        "0.25,0.5,0.75",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 6 * 4 * 3);
    for h in 1..=6u32 {
        for x in ["0.25", "0.5", "0.75"] {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r[1] == h.to_string() && r[6] == x)
                .map(|r| r[7].parse().unwrap())
                .collect();
            assert_eq!(errs.len(), 4);
            if h == 1 {
                assert!(errs.iter().all(|&e| e < 1e-12));
            } else {
                assert!(errs.windows(2).all(|w| w[1] < w[0]), "H={h} x={x}: {errs:?}");
            }
        }
    }
}

#[test]
fn sweep_rows_are_canonical_and_empty_ranges_write_nothing() {
    let a = ok(&["sweep", "--sweep-H", "3,1,2", "--sweep-alpha", "3/4,1/4", "--metric", "point-mass,peak-to-trough"]);
    let b = ok(&["sweep", "--sweep-H", "1..=3", "--sweep-alpha", "1/4,3/4", "--metric", "peak-to-trough,point-mass"]);
    assert_eq!(a, b);
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("empty.csv");
    assert_eq!(code(&["sweep", "--sweep-H", "", "--metric", "point-mass", "--out", path_arg(&out)]), 0);
    assert_eq!(fs::metadata(&out).unwrap().len(), 0);
}

#[test]
fn config_file_round_trips_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    let dumped = ok(&["kernel", "--L", "12", "--H", "3", "--alpha", "1/3", "--method", "exact,integral", "--dump-config"]);
    fs::write(&cfg, &dumped).unwrap();
    assert_eq!(ok(&["kernel", "--config", path_arg(&cfg), "--dump-config"]), dumped);
    let from_file = ok(&["kernel", "--config", path_arg(&cfg), "--format", "json"]);
    let from_flags = ok(&["kernel", "--L", "12", "--H", "3", "--alpha", "1/3", "--method", "exact,integral", "--format", "json"]);
    assert_eq!(from_file, from_flags);
    let overridden: Value = serde_json::from_str(&ok(&["kernel", "--config", path_arg(&cfg), "--H", "5", "--format", "json"])).unwrap();
    assert_eq!(overridden["H"], 5);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["kernel", "--L", "4", "--bogus"]), 2);
    assert_eq!(code(&["kernel", "--method", "nope"]), 2);
    assert_eq!(code(&["density", "--alpha", "2"]), 3);
    assert_eq!(code(&["kernel", "--L", "0"]), 3);
    let missing = PathBuf::from("/nonexistent/profile.csv");
    assert_eq!(code(&["compare", path_arg(&missing), path_arg(&missing)]), 1);
    assert_eq!(code(&["compare", "--gate"]), 2);
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown-key = 1\n").unwrap();
    assert_eq!(code(&["kernel", "--config", path_arg(&bad)]), 2);
}

#[test]
fn mean_columns_are_normalized() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("s.csv");
    ok(&["simulate", "--L", "16", "--H", "2", "--d", "8", "--seeds", "3", "--out", path_arg(&p)]);
    let total: f64 = mean_column(&p).iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}
