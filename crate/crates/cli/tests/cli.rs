use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mcasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcasim"))
        .args(args)
        .env_remove("MCASIM_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = mcasim(&["mecassoc", "--config", "defaults", "--samples", "40", "--runs", "2", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    for f in ["manifest.json", "summary.json", "mecassoc_results.csv", "mecassoc_runs.csv", "mecassoc_ccdf.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let manifest = read_json(&out.join("manifest.json"));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(manifest["run_count"], 2);
    assert_eq!(manifest["config_hash"], summary["config_hash"]);
    let hash = mcasim_core::runner::sha256_hex(&fs::read(out.join("manifest.json")).unwrap());
    assert_eq!(summary["manifest_hash"], hash.as_str());
    assert_eq!(summary["run_seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mcasim(&["dupstat", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_and_flag_exit_2() {
    assert_eq!(mcasim(&["handover"]).status.code(), Some(2));
    assert_eq!(mcasim(&["dupstat", "--config", "defaults", "--out", "x", "--fast"]).status.code(), Some(2));
    assert_eq!(mcasim(&[]).status.code(), Some(2));
}

#[test]
fn missing_out_dir_is_a_usage_error_unless_env_set() {
    assert_eq!(mcasim(&["ccselect", "--config", "defaults"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mcasim"))
        .args(["ccselect", "--config", "defaults", "--samples", "30", "--quiet"])
        .env("MCASIM_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("ccselect_results.csv").is_file());
}

fn run_with_config(mechanism: &str, body: &str) -> (Output, tempfile::TempDir) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, body).unwrap();
    let out = tmp.path().join("out");
    let o = mcasim(&[mechanism, "--config", cfg.to_str().unwrap(), "--quiet", "--out", out.to_str().unwrap()]);
    (o, tmp)
}

#[test]
fn config_errors_exit_2_with_diagnostic() {
    let (o, _t) = run_with_config("ccselect", r#"{"ccselect": {"layout": {"bandwidth_hz": -1.0}}}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ccselect.layout.bandwidth_hz"), "{}", stderr(&o));

    let (o, _t) = run_with_config("ccselect", r#"{"ccselect": {"proposed": {"threshold": 1.5}}}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("threshold"), "{}", stderr(&o));

    let (o, _t) = run_with_config("dupstat", "{\n  \"dupstat\": {\n    \"harq_rtt\": 4\n  }\n}");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert!(stderr(&o).contains("harq_rtt"), "{}", stderr(&o));

    let (o, _t) = run_with_config("dupstat", r#"{"compcoord": {}}"#);
    assert_eq!(o.status.code(), Some(2));

    let tmp = tempfile::tempdir().unwrap();
    let o = mcasim(&["dupstat", "--config", "/nonexistent.json", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcasim(&["dupstat", "--config", "defaults", "--runs", "0", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_block_echoes_every_default() {
    let (o, tmp) = run_with_config("compcoord", r#"{"compcoord": {}, "sample_budget": 500}"#);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&tmp.path().join("out/summary.json"));
    let defaulted: Vec<&str> = s["defaulted"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for k in ["compcoord.episodes", "compcoord.link.mean_snr_db", "compcoord.xn_delay_slots", "master_seed"] {
        assert!(defaulted.contains(&k), "{k} not in {defaulted:?}");
    }
    assert!(!defaulted.contains(&"sample_budget"));
    assert_eq!(s["config"]["compcoord"]["llu_probability"], 0.5);
}

#[test]
fn echoed_config_replays_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let o = mcasim(&["dupstat", "--config", "defaults", "--seed", "9", "--samples", "20000", "--runs", "2", "--quiet", "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = read_json(&a.join("summary.json"))["config"].clone();
    let cfg = tmp.path().join("echo.json");
    fs::write(&cfg, serde_json::to_string_pretty(&echo).unwrap()).unwrap();
    let b = tmp.path().join("b");
    let o = mcasim(&["dupstat", "--config", cfg.to_str().unwrap(), "--quiet", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["dupstat_results.csv", "dupstat_runs.csv", "dupstat_latency.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (ma, mb) = (read_json(&a.join("manifest.json")), read_json(&b.join("manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn runs_use_derived_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mcasim(&["ccselect", "--config", "defaults", "--runs", "8", "--samples", "50", "--quiet", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&tmp.path().join("summary.json"));
    let seeds: Vec<u64> = s["run_seeds"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let want: Vec<u64> = (0..8).map(|i| mcasim_core::runner::replication_seed(1, i)).collect();
    assert_eq!(seeds, want);
    assert_eq!(s["metrics"]["runs"], 8);
    assert!(s["metrics"]["gain_p50"].is_number());
}

#[test]
fn prints_results_unless_quiet() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mcasim(&["compcoord", "--config", "defaults", "--samples", "1000", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("scheme,user_class,avg_two_way_latency_slots"), "{text}");
}
