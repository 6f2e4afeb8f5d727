use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use vsc_lab::cli::sha256_hex;

const SMALL: &str = r#"
[problem]
max_degree = 3
n_sources = 8
n_dirs = 8

[solver]
grid_size = 16

[tikhonov]
max_iter = 4
"#;

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path
}

fn vsc_lab(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vsc-lab"));
    cmd.args(args).args(["--jobs", "2"]).env_remove("VSC_LAB_CACHE");
    if let Some(c) = cache {
        cmd.env("VSC_LAB_CACHE", c);
    }
    cmd.output().unwrap()
}

fn run_in(dir: &Path, out: &str, sub: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    let out = dir.join(out);
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    vsc_lab(&args, None)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn forward_zero_contrast_has_zero_far_field() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let text = std::fs::read_to_string(tmp.path().join("run.toml")).unwrap().replace("[problem]", "[problem]\nphantom = \"zero\"");
    std::fs::write(tmp.path().join("run.toml"), text).unwrap();
    let o = run_in(tmp.path(), "zero", "forward", &["--kind", "far"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(tmp.path().join("zero/data.csv")).unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rec[3].parse::<f64>().unwrap(), 0.0);
        n += 1;
    }
    assert_eq!(n, 64);
    assert_eq!(manifest(&tmp.path().join("zero"))["status"], "ok");
}

#[test]
fn small_m_is_rejected_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let text = std::fs::read_to_string(tmp.path().join("run.toml")).unwrap().replace("[problem]", "[problem]\nm = 1.5");
    std::fs::write(tmp.path().join("run.toml"), text).unwrap();
    let o = run_in(tmp.path(), "out", "forward", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m > 3/2"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "\n[vsc]\nsafty = 2.0\n");
    let o = run_in(tmp.path(), "out", "forward", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("safty"), "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_3_and_records_it() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let text = std::fs::read_to_string(tmp.path().join("run.toml"))
        .unwrap()
        .replace("grid_size = 16", "grid_size = 16\nmax_iterations = 1\ntolerance = 1e-14");
    std::fs::write(tmp.path().join("run.toml"), text).unwrap();
    let o = run_in(tmp.path(), "out", "forward", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m["status"], "failed");
    assert!(!m["diagnostics"].as_str().unwrap().is_empty());
}

#[test]
fn rate_sweep_writes_one_row_per_noise_level() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let o = run_in(tmp.path(), "out", "rate-sweep", &["--A", "300", "--deltas", "1e-1,3e-2,1e-2,3e-3,1e-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let rows = csv::Reader::from_path(out.join("rate_sweep.csv")).unwrap().records().count();
    assert_eq!(rows, 5);
    let plot = std::fs::read_to_string(out.join("rate_plot.dat")).unwrap();
    assert_eq!(plot.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let m = manifest(&out);
    assert_eq!(m["config"]["tikhonov"]["a"], 300.0);
    assert_eq!(m["config"]["tikhonov"]["deltas"].as_array().unwrap().len(), 5);
}

#[test]
fn rate_sweep_needs_the_constant() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let o = run_in(tmp.path(), "out", "rate-sweep", &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "\n[near_far]\nn_directions = 2\nn_levels = 3\n");
    for out in ["a", "b"] {
        let o = run_in(tmp.path(), out, "near-to-far-check", &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ma, mb) = (manifest(&tmp.path().join("a")), manifest(&tmp.path().join("b")));
    let files = ma["outputs"].as_array().unwrap();
    assert!(!files.is_empty());
    for (fa, fb) in files.iter().zip(mb["outputs"].as_array().unwrap()) {
        assert_eq!(fa["sha256"], fb["sha256"], "{} differs between runs", fa["path"]);
        let bytes = std::fs::read(fa["path"].as_str().unwrap()).unwrap();
        assert_eq!(sha256_hex(&bytes), fa["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, fa["bytes"].as_u64().unwrap());
    }
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["summary"], mb["summary"]);
}

#[test]
fn disk_cache_is_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    write_config(tmp.path(), "");
    let cfg = tmp.path().join("run.toml");
    let run = |out: &str| {
        let out = tmp.path().join(out);
        let o = vsc_lab(&["forward", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()], Some(&cache));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out.join("data.bin")).unwrap()
    };
    let first = run("a");
    let entries: Vec<PathBuf> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    assert_eq!(run("b"), first);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}

#[test]
fn lattice_audit_passes_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let o = run_in(tmp.path(), "out", "lattice-audit", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m["summary"]["all_bounded"], true);
    assert_eq!(m["summary"]["split_pass"], m["summary"]["split_total"]);
}
