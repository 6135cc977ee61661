use std::path::Path;
use std::process::{Command, Output};

fn magnon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnon")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn list_names_every_experiment() {
    let out = magnon(&["list"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for id in ["fig1d_sensitivity_vs_gamma_m", "fig3_tau_sweep", "s2_model_ladder", "characterization_suite"] {
        assert!(stdout.contains(id), "{stdout}");
    }
}

#[test]
fn default_configuration_validates_cleanly() {
    let out = magnon(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(out.stdout.is_empty(), "{}", text(&out.stdout));
}

#[test]
fn empty_grid_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment.fig3_tau_sweep.grids]\ntau_us = []\n");
    let out = magnon(&["validate", "fig3_tau_sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("experiment.fig3_tau_sweep.grids.tau_us"), "{stdout}");
    assert!(stdout.contains("empty"), "{stdout}");

    let run = magnon(&["run", "fig3_tau_sweep", "--config", &cfg, "--out", &dir.path().display().to_string()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!dir.path().join("fig3_tau_sweep").exists());
}

#[test]
fn negative_linewidth_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[magnon]\nlinewidth_mhz = -1.0\n");
    let out = magnon(&["run", "fig1d_sensitivity_vs_gamma_m", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("magnon.linewidth_mhz"), "{}", text(&out.stderr));
}

#[test]
fn unknown_experiment_exits_with_usage_code() {
    let out = magnon(&["run", "fig9_nothing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("fig9_nothing"));
    let bad_key = tempfile::tempdir().unwrap();
    let cfg = write_config(bad_key.path(), "[experiment.settings]\nbogus = 1\n");
    assert_eq!(magnon(&["validate", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn low_shot_count_warns_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nshots = 1000\n");
    let out = magnon(&["validate", "fig2_signal_noise", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("warning") && stdout.contains("experiment.shots"), "{stdout}");

    let cfg = write_config(dir.path(), "[experiment]\nshots = 10\n");
    assert_eq!(magnon(&["validate", "fig2_signal_noise", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn reruns_with_one_seed_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nshots = 20000\n[experiment.fig2_signal_noise.grids]\nn_bar = [0.0, 0.02, 0.04]\n",
    );
    let bundles: Vec<_> = ["a", "b"]
        .iter()
        .map(|sub| {
            let out_dir = dir.path().join(sub);
            let out = magnon(&[
                "run",
                "fig2_signal_noise",
                "--config",
                &cfg,
                "--seed",
                "7",
                "--out",
                &out_dir.display().to_string(),
            ]);
            assert!(out.status.success(), "{}", text(&out.stderr));
            out_dir.join("fig2_signal_noise")
        })
        .collect();

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(bundles[0].join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    assert_eq!(manifest["seed"], 7);
    for f in files {
        let name = f["name"].as_str().unwrap();
        let a = std::fs::read(bundles[0].join(name)).unwrap();
        let b = std::fs::read(bundles[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
        assert_eq!(f["sha256"].as_str().unwrap(), magnon_experiments::output::sha256_hex(&a));
        let first = text(&a).lines().next().unwrap().to_string();
        assert!(first.starts_with("# magnon-csv schema=1 experiment=fig2_signal_noise"), "{first}");
    }
    let other: serde_json::Value =
        serde_json::from_slice(&std::fs::read(bundles[1].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], other["config_hash"]);
}
