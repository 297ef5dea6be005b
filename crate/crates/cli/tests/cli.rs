//! End-to-end command-line checks driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pitchtrack"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn simulate_into(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--output", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "simulate failed: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn print_config_round_trips() {
    let out = run(&["--print-config"]);
    assert!(out.status.success());
    let parsed = pitchtrack::config::RunConfig::from_toml(&stdout(&out)).unwrap();
    assert_eq!(parsed, pitchtrack::config::RunConfig::default());
}

#[test]
fn simulate_is_deterministic_and_trackable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");

    // a short scene via a spec file
    let spec_path = tmp.path().join("scene.toml");
    let spec = pitchtrack::sim::TrajectorySpec {
        frames: 20,
        seed: 5,
        noise: pitchtrack::sim::NoiseSpec::none(),
        ..Default::default()
    };
    std::fs::write(&spec_path, spec.to_toml()).unwrap();

    for dir in [&dir_a, &dir_b] {
        simulate_into(dir, &["--spec", spec_path.to_str().unwrap()]);
    }
    for name in ["detections.jsonl", "annotations.jsonl", "truth.jsonl", "rig.json"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    // track → exit 0, CR 100 in the summary, byte-identical on repeat
    let reports_1 = tmp.path().join("reports1.jsonl");
    let reports_2 = tmp.path().join("reports2.jsonl");
    for reports in [&reports_1, &reports_2] {
        let out = run(&[
            "track",
            dir_a.join("detections.jsonl").to_str().unwrap(),
            "--output",
            reports.to_str().unwrap(),
            "--rig",
            dir_a.join("rig.json").to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let text = stdout(&out);
        assert!(text.contains("CR 100.00%"), "summary: {text}");
        assert!(text.contains("1 reinits"), "summary: {text}");
    }
    assert_eq!(
        std::fs::read(&reports_1).unwrap(),
        std::fs::read(&reports_2).unwrap(),
        "tracking must be idempotent"
    );

    // eval the tracked reports against the annotations
    let out = run(&[
        "eval",
        reports_1.to_str().unwrap(),
        dir_a.join("annotations.jsonl").to_str().unwrap(),
        "--tau",
        "5,10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("JaC_5"), "header: {text}");
    let values = text.lines().nth(1).unwrap();
    assert!(values.starts_with("100.00"), "JaC_5 should be 100: {values}");

    // evaluating the truth cameras also gives 100 everywhere
    let out = run(&[
        "eval",
        dir_a.join("truth.jsonl").to_str().unwrap(),
        dir_a.join("annotations.jsonl").to_str().unwrap(),
    ]);
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("100.00"));
}

#[test]
fn fit_rig_recovers_simulated_rig() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scene");
    simulate_into(&dir, &["--seed", "9"]);

    let rig_out = tmp.path().join("fitted_rig.json");
    let out = run(&[
        "fit-rig",
        dir.join("truth.jsonl").to_str().unwrap(),
        "--output",
        rig_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let fitted = pitchtrack::io::read_rig(&rig_out).unwrap();
    let spec_rig = pitchtrack::io::read_rig(&dir.join("rig.json")).unwrap();
    assert!((fitted.t - spec_rig.t).norm() < 1e-3, "T {} off", (fitted.t - spec_rig.t).norm());
    assert!((fitted.delta - spec_rig.delta).abs() < 1e-4);
}

#[test]
fn plot_data_emits_one_row_per_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scene");
    let spec_path = tmp.path().join("scene.toml");
    let spec = pitchtrack::sim::TrajectorySpec { frames: 8, seed: 3, ..Default::default() };
    std::fs::write(&spec_path, spec.to_toml()).unwrap();
    simulate_into(&dir, &["--spec", spec_path.to_str().unwrap()]);

    let plot_dir = tmp.path().join("plots");
    let out = run(&[
        "plot-data",
        dir.join("truth.jsonl").to_str().unwrap(),
        "--output",
        plot_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in ["pan.dat", "tilt.dat", "roll.dat", "focal.dat", "k1.dat", "position.dat", "score.dat"] {
        let text = std::fs::read_to_string(plot_dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 8, "{name} rows");
    }
    let position = std::fs::read_to_string(plot_dir.join("position.dat")).unwrap();
    assert_eq!(position.lines().next().unwrap().split_whitespace().count(), 4);
}

#[test]
fn empty_detections_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = run(&[
        "track",
        empty.to_str().unwrap(),
        "--output",
        tmp.path().join("out.jsonl").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no frames"));
}

#[test]
fn eval_reflects_missing_predictions_in_cr() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scene");
    let spec_path = tmp.path().join("scene.toml");
    let spec = pitchtrack::sim::TrajectorySpec {
        frames: 10,
        seed: 4,
        noise: pitchtrack::sim::NoiseSpec::none(),
        ..Default::default()
    };
    std::fs::write(&spec_path, spec.to_toml()).unwrap();
    simulate_into(&dir, &["--spec", spec_path.to_str().unwrap()]);

    // keep only the first half of the truth records
    let truth: Vec<pitchtrack::io::ReportRecord> =
        pitchtrack::io::read_jsonl(&dir.join("truth.jsonl")).unwrap();
    let half_path = tmp.path().join("half.jsonl");
    pitchtrack::io::write_jsonl(&half_path, &truth[..5]).unwrap();

    let out = run(&[
        "eval",
        half_path.to_str().unwrap(),
        dir.join("annotations.jsonl").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let values = stdout(&out).lines().nth(1).unwrap().to_string();
    let cr: f64 = values.split_whitespace().last().unwrap().parse().unwrap();
    assert_eq!(cr, 50.0);
}

#[test]
fn track_multiple_sequences_with_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("scene.toml");
    let spec = pitchtrack::sim::TrajectorySpec {
        frames: 8,
        seed: 6,
        noise: pitchtrack::sim::NoiseSpec::none(),
        ..Default::default()
    };
    std::fs::write(&spec_path, spec.to_toml()).unwrap();

    let mut inputs: Vec<PathBuf> = Vec::new();
    for (i, seed) in [("s1", "21"), ("s2", "22")] {
        let dir = tmp.path().join(i);
        simulate_into(&dir, &["--spec", spec_path.to_str().unwrap(), "--seed", seed]);
        inputs.push(dir.join("detections.jsonl"));
    }
    let out_dir = tmp.path().join("reports");
    let out = run(&[
        "track",
        inputs[0].to_str().unwrap(),
        inputs[1].to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("detections.reports.jsonl").exists() || out_dir.read_dir().unwrap().count() == 2);
}

#[test]
fn reinit_only_mode_recovers_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scene");
    let spec_path = tmp.path().join("scene.toml");
    let spec = pitchtrack::sim::TrajectorySpec {
        frames: 6,
        seed: 8,
        noise: pitchtrack::sim::NoiseSpec::none(),
        ..Default::default()
    };
    std::fs::write(&spec_path, spec.to_toml()).unwrap();
    simulate_into(&dir, &["--spec", spec_path.to_str().unwrap()]);

    let out_path = tmp.path().join("reinit.jsonl");
    let out = run(&[
        "reinit",
        dir.join("detections.jsonl").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
        "--rig",
        dir.join("rig.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<pitchtrack::io::ReportRecord> =
        pitchtrack::io::read_jsonl(&out_path).unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r.camera.is_some() && r.reinit_used));
}
