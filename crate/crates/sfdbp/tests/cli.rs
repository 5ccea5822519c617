//! End-to-end CLI tests: exit codes, determinism, and the oracle
//! fixtures shipped with the crate.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sfdbp")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawning sfdbp")
}

fn base_config(out_dir: &Path) -> String {
    format!(
        r#"{{
        "cameras": [
            {{"aperture_radius_m": 0.002, "lens_to_image_m": 0.0396, "focal_length_m": 0.035, "pixel_scale_px_per_m": 20000}},
            {{"aperture_radius_m": 0.002, "lens_to_image_m": 0.0364, "focal_length_m": 0.035, "pixel_scale_px_per_m": 20000}}
        ],
        "depth_min_m": 0.40,
        "depth_max_m": 0.76,
        "label_count": 8,
        "max_iters": 30,
        "observations": ["obs_0.pfm", "obs_1.pfm"],
        "synth": {{
            "width": 48,
            "height": 40,
            "scene": {{"kind": "slanted-plane", "depth_near_m": 0.42, "depth_far_m": 0.74}},
            "texture": {{"kind": "noise", "seed": 11}}
        }},
        "eval": {{
            "estimate_dir": ".",
            "ground_truth": "ground_truth.pfm"
        }},
        "output_dir": {out:?}
    }}"#,
        out = out_dir.to_str().unwrap()
    )
}

#[test]
fn missing_config_file_exits_2() {
    let out = run(&["estimate", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{\"output_dir\": \"x\"}").unwrap();
    let out = run(&["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn missing_observation_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, base_config(dir.path())).unwrap();
    // estimate without running synth first: observation files do not exist
    let out = run(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn synth_estimate_eval_pipeline_succeeds_and_is_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, base_config(dir.path())).unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = run(&["synth", "--config", cfg]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for f in [
        "obs_0.pfm",
        "obs_1.pfm",
        "ground_truth.pfm",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }

    let out = run(&["estimate", "--config", cfg]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for f in ["labels.pgm", "depth.pfm", "preview.pgm", "diagnostics.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }

    let out = run(&["eval", "--config", cfg]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    let bad = report["bad_k_fraction"].as_f64().unwrap();
    assert!(bad < 0.25, "bad_1_fraction {bad} too high for a clean ramp");
}

#[test]
fn override_flag_changes_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, base_config(dir.path())).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["synth", "--config", cfg]).status.code(), Some(0));
    let out = run(&["estimate", "--config", cfg, "--override", "max_iters=0"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = run(&[
        "estimate",
        "--config",
        cfg,
        "--override",
        "schedule=\"synchronous\"",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("synchronous"), "{manifest}");
}

#[test]
fn estimate_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, base_config(dir.path())).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["synth", "--config", cfg]).status.code(), Some(0));

    let read_all = |d: &Path| {
        let mut m = std::collections::BTreeMap::new();
        for f in ["labels.pgm", "depth.pfm", "preview.pgm", "manifest.json"] {
            m.insert(f, fs::read(d.join(f)).unwrap());
        }
        m
    };
    assert_eq!(run(&["estimate", "--config", cfg]).status.code(), Some(0));
    let first = read_all(dir.path());
    assert_eq!(run(&["estimate", "--config", cfg]).status.code(), Some(0));
    let second = read_all(dir.path());
    assert_eq!(first, second, "estimate outputs changed between runs");
}

#[test]
fn synth_respects_thread_env_and_stays_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, base_config(dir.path())).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["synth", "--config", cfg]).status.code(), Some(0));

    let estimate_with_threads = |threads: &str| {
        let out = Command::new(bin())
            .args(["estimate", "--config", cfg])
            .env("SFDBP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        fs::read(dir.path().join("labels.pgm")).unwrap()
    };
    let single = estimate_with_threads("1");
    let multi = estimate_with_threads("4");
    assert_eq!(single, multi, "thread count changed the labeling");
}

fn oracle_report(fixture_name: &str) -> serde_json::Value {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"oracle": {{"instance": {inst:?}}}, "output_dir": {out:?}}}"#,
            inst = fixture(fixture_name).to_str().unwrap(),
            out = dir.path().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    serde_json::from_str(&fs::read_to_string(dir.path().join("oracle_report.json")).unwrap())
        .unwrap()
}

#[test]
fn oracle_chain_fixture_matches_exactly() {
    let r = oracle_report("tiny_chain.json");
    assert_eq!(r["energies_match"], serde_json::Value::Bool(true), "{r}");
    assert_eq!(r["exhaustive_labels"], r["bp_labels"], "{r}");
}

#[test]
fn oracle_lambda0_fixture_matches_exactly() {
    let r = oracle_report("tiny_lambda0.json");
    assert_eq!(r["energies_match"], serde_json::Value::Bool(true), "{r}");
}

#[test]
fn oracle_loopy_fixture_reports_small_gap() {
    let r = oracle_report("tiny_loopy.json");
    let gap = r["energy_gap"].as_f64().unwrap();
    let exh = r["exhaustive_energy"].as_f64().unwrap();
    assert!(gap >= -1e-9, "BP energy below the exhaustive optimum: {r}");
    assert!(gap <= 0.05 * exh.max(1.0), "loopy gap too large: {r}");
}
