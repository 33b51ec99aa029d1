use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfp"))
        .args(args)
        .env_remove("LFP_SEED")
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().expect("summary line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {line}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// NK(10, 2) benchmark with four budgets and a little noise.
fn nk_bench(dir: &Path) -> std::path::PathBuf {
    let out = lfp(&[
        "gen-nk", "--n", "10", "--k", "2", "--seed", "7", "--epochs", "4,12,36,108", "--noise", "0.05",
        "--out", s(dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(&out)["dataset"], "nk-n10-k2-s7");
    assert!(dir.join("nk-n10-k2-s7.json").exists());
    dir.join("nk-n10-k2-s7.jsonl")
}

#[test]
fn generated_benchmark_validates() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let out = lfp(&["validate", "--input", s(&bench)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["status"], "ok");
}

#[test]
fn footprint_is_deterministic_with_eight_metrics() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = lfp(&[
            "footprint", "--input", s(&bench), "--seed", "42", "--samples", "60", "--walks", "6", "--steps", "30",
            "--trials", "3", "--runs", "40", "--persistence-samples", "200", "--out", s(&out_dir),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("footprint.json")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let report: Value = serde_json::from_slice(&a).unwrap();
    let metrics = report["metrics"].as_object().unwrap();
    assert_eq!(metrics.len(), 8);
    for key in [
        "mean_fitness", "std_fitness", "ruggedness_tau", "cardinal_optima", "persistence_pos_q1",
        "persistence_neg_q1", "auc_pos_q1", "auc_neg_q1",
    ] {
        assert!(metrics.contains_key(key), "{key}");
    }
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let args = ["optima", "--input", s(&bench), "--seed", "1", "--trials", "3", "--runs", "30", "--out", s(dir.path())];
    assert_eq!(lfp(&args).status.code(), Some(0));
    let before = std::fs::read(dir.path().join("optima.csv")).unwrap();
    let again = lfp(&args);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(summary(&again)["status"], "error");
    assert_eq!(std::fs::read(dir.path().join("optima.csv")).unwrap(), before);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(lfp(&forced).status.code(), Some(0));
}

#[test]
fn optima_csv_layout() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let out = lfp(&["optima", "--input", s(&bench), "--seed", "3", "--runs", "50", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("optima.csv")).unwrap();
    let mut lines = text.lines();
    let config = lines.next().unwrap();
    assert!(config.starts_with("# config: {"));
    let cfg: Value = serde_json::from_str(config.trim_start_matches("# config: ")).unwrap();
    assert_eq!(cfg["seed"], 3);
    let rows: Vec<&str> = lines.collect();
    // Header, nine trials, summary.
    assert_eq!(rows.len(), 1 + 9 + 1, "{text}");
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, format!("seed = 5\ninput = {:?}\nwalks = 4\nsteps = 20\n", s(&bench))).unwrap();

    let from_file = lfp(&["ruggedness", "--config", s(&cfg_path), "--out", s(&dir.path().join("f"))]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f/ruggedness.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["config"]["walks"], 4);

    let flagged =
        lfp(&["ruggedness", "--config", s(&cfg_path), "--seed", "9", "--walks", "3", "--out", s(&dir.path().join("g"))]);
    assert_eq!(flagged.status.code(), Some(0));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g/ruggedness.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["walks"], 3);
    assert_eq!(report["config"]["steps"], 20);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_lfp"))
        .args(["walk", "--input", s(&bench), "--walks", "2", "--steps", "5", "--out", s(dir.path())])
        .env("LFP_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("walks.csv")).unwrap();
    assert!(text.starts_with("# config: {"));
    assert!(text.lines().next().unwrap().contains("\"seed\":11"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let b = s(&bench);
    let o = |sub: &str| dir.path().join(sub).to_str().unwrap().to_string();

    // Missing seed on a stochastic command.
    assert_eq!(lfp(&["walk", "--input", b, "--out", &o("a")]).status.code(), Some(2));
    // Unknown flag.
    assert_eq!(lfp(&["walk", "--bogus"]).status.code(), Some(2));
    assert_eq!(lfp(&["--help"]).status.code(), Some(0));
    // Missing input file.
    let missing = lfp(&["validate", "--input", &o("nope.jsonl")]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(summary(&missing)["category"], "data");
    // Unknown budget.
    assert_eq!(lfp(&["validate", "--input", b, "--epoch", "5"]).status.code(), Some(3));
    // Bad parameter.
    assert_eq!(
        lfp(&["optima", "--input", b, "--seed", "1", "--pd", "1.5", "--out", &o("c")]).status.code(),
        Some(2)
    );
    // Unknown key in the config file.
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sed = 1\n").unwrap();
    assert_eq!(lfp(&["validate", "--input", b, "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn compare_writes_radar_rows() {
    let dir = TempDir::new().unwrap();
    let bench = nk_bench(dir.path());
    let mut reports = Vec::new();
    for seed in ["1", "2"] {
        let out_dir = dir.path().join(seed);
        let out = lfp(&[
            "footprint", "--input", s(&bench), "--seed", seed, "--samples", "40", "--walks", "4", "--steps", "20",
            "--no-birthday", "--persistence-samples", "100", "--out", s(&out_dir),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(out_dir.join("footprint.json"));
    }
    let out_dir = dir.path().join("cmp");
    let out = lfp(&["compare", "--reports", s(&reports[0]), s(&reports[1]), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let radar = std::fs::read_to_string(out_dir.join("radar.csv")).unwrap();
    let rows: Vec<&str> = radar.lines().skip(1).collect();
    assert_eq!(rows[0], "dataset,axis,value,normalized");
    assert_eq!(rows.len(), 1 + 2 * 8);
}
