//! End-to-end runs of the `nbeats` binary: train -> forecast -> evaluate ->
//! apply -> params, plus error paths and byte-level idempotence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nbeats::data::{write_meta, write_values, Dataset, Frequency, TimeSeries};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nbeats"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn nbeats");
    assert!(
        out.status.success(),
        "nbeats {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn nbeats");
    assert!(
        !out.status.success(),
        "nbeats {:?} unexpectedly succeeded",
        args
    );
    out
}

fn synth_dataset(n: usize, horizon: usize, seed: u64) -> Dataset {
    // Deterministic positive trending series; enough length for a 7H grid.
    Dataset::new(
        (0..n)
            .map(|i| {
                let drift = 0.3 + 0.1 * ((i as u64 + seed) % 5) as f64;
                TimeSeries {
                    id: format!("Y{i}"),
                    values: (0..60)
                        .map(|t| 25.0 + drift * t as f64 + ((t * 7 + i) % 5) as f64 * 0.2)
                        .collect(),
                    frequency: Frequency::Yearly,
                    m: 1,
                    horizon,
                }
            })
            .collect(),
    )
}

fn write_dataset(ds: &Dataset, dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    let values = dir.join(format!("{stem}_values.csv"));
    let meta = dir.join(format!("{stem}_meta.csv"));
    write_values(ds, &values).unwrap();
    write_meta(ds, &meta).unwrap();
    (values, meta)
}

fn tiny_config(dir: &Path, values: &Path, meta: &Path) -> PathBuf {
    let config = serde_json::json!({
        "preset": "m4-parallel-generic",
        "dataset": { "values": values, "meta": meta },
        "seed": 3,
        "threads": 1,
        "ensemble": {
            "losses": ["smape", "mape"],
            "repeats": 1,
            "frequencies": ["Yearly"],
            "horizons": { "Yearly": 4 }
        },
        "train": { "iterations": 30, "batch_size": 8 },
        "model": { "stacks": 2, "width": 8 }
    });
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn full_pipeline_train_forecast_evaluate_apply_params() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_dataset(4, 4, 0);
    let (values, meta) = write_dataset(&ds, dir.path(), "train");
    let config = tiny_config(dir.path(), &values, &meta);
    let ens_dir = dir.path().join("ens");

    run_ok(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        ens_dir.to_str().unwrap(),
    ]);
    assert!(ens_dir.join("manifest.json").exists());
    assert!(ens_dir.join("member_0000.nbm").exists());
    assert!(ens_dir.join("member_0001.nbm").exists());
    assert!(ens_dir.join("traces/member_0000.csv").exists());
    assert!(ens_dir.join("train_report.json").exists());

    // Forecast the dataset's future (row count == series count).
    let fc_dir = dir.path().join("fc");
    run_ok(&[
        "forecast",
        "--ensemble",
        ens_dir.to_str().unwrap(),
        "--values",
        values.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        fc_dir.to_str().unwrap(),
        "--per-member",
    ]);
    let forecasts = std::fs::read_to_string(fc_dir.join("forecasts.csv")).unwrap();
    assert_eq!(forecasts.lines().count(), 1 + ds.len());
    // Two members x six heads of per-member votes.
    let member_files = std::fs::read_dir(fc_dir.join("members")).unwrap().count();
    assert_eq!(member_files, 12);

    // Deterministic across invocations, byte for byte.
    let fc_dir2 = dir.path().join("fc2");
    run_ok(&[
        "forecast",
        "--ensemble",
        ens_dir.to_str().unwrap(),
        "--values",
        values.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        fc_dir2.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(fc_dir.join("forecasts.csv")).unwrap(),
        std::fs::read(fc_dir2.join("forecasts.csv")).unwrap()
    );

    // Apply on a fresh target with a different horizon exercises R_O.
    let target = synth_dataset(3, 6, 9);
    let (tvalues, tmeta) = write_dataset(&target, dir.path(), "target");
    let apply_dir = dir.path().join("apply");
    run_ok(&[
        "apply",
        "--ensemble",
        ens_dir.to_str().unwrap(),
        "--values",
        tvalues.to_str().unwrap(),
        "--meta",
        tmeta.to_str().unwrap(),
        "--regime",
        "r-o",
        "--out",
        apply_dir.to_str().unwrap(),
    ]);
    assert!(apply_dir.join("forecasts.csv").exists());
    assert!(apply_dir.join("report.json").exists());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(apply_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["average"]["count"], 3);

    // r-sh refuses the horizon mismatch.
    run_err(&[
        "apply",
        "--ensemble",
        ens_dir.to_str().unwrap(),
        "--values",
        tvalues.to_str().unwrap(),
        "--meta",
        tmeta.to_str().unwrap(),
        "--regime",
        "r-sh",
        "--out",
        dir.path().join("apply2").to_str().unwrap(),
    ]);

    // Parameter table for the trained ensemble.
    let out = run_ok(&["params", "--ensemble", ens_dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("total"));
    assert!(stdout.lines().count() >= 4);
}

#[test]
fn evaluate_naive2_forecasts_scores_owa_one() {
    let dir = tempfile::tempdir().unwrap();
    let full = synth_dataset(5, 4, 1);
    let (values, meta) = write_dataset(&full, dir.path(), "eval");

    // Build naive2 forecasts from the train part.
    let (split, _) = full.clone().train_test_split();
    let mut forecasts = BTreeMap::new();
    for (i, s) in split.series.iter().enumerate() {
        forecasts.insert(
            s.id.clone(),
            nbeats::metrics::naive2(split.train_values(i), s.m, s.horizon).unwrap(),
        );
    }
    let fpath = dir.path().join("naive2.csv");
    {
        use std::io::Write;
        let mut f = std::fs::File::create(&fpath).unwrap();
        for (id, fc) in &forecasts {
            let cells: Vec<String> = fc.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{id},{}", cells.join(",")).unwrap();
        }
    }

    let eval_dir = dir.path().join("eval_out");
    let out = run_ok(&[
        "evaluate",
        "--forecasts",
        fpath.to_str().unwrap(),
        "--values",
        values.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("OWA 1.0000"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(eval_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["average"]["owa"], 1.0);
    assert!(eval_dir.join("per_series.csv").exists());
}

#[test]
fn evaluate_misses_a_series_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let full = synth_dataset(2, 4, 2);
    let (values, meta) = write_dataset(&full, dir.path(), "m");
    let fpath = dir.path().join("partial.csv");
    std::fs::write(&fpath, "Y0,1,2,3,4\n").unwrap();
    let out = run_err(&[
        "evaluate",
        "--forecasts",
        fpath.to_str().unwrap(),
        "--values",
        values.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Y1"), "{stderr}");
}

#[test]
fn invalid_preset_lists_the_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_dataset(2, 4, 3);
    let (values, meta) = write_dataset(&ds, dir.path(), "p");
    let out = run_err(&[
        "train",
        "--preset",
        "m5-mega",
        "--values",
        values.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
        "--out",
        dir.path().join("e").to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("m4-parallel-generic"), "{stderr}");
    assert!(stderr.contains("m4-interpretable"), "{stderr}");
}

#[test]
fn unknown_config_key_is_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"preset\": \"m4-parallel-generic\",\n  \"bogus\": 1\n}").unwrap();
    let out = run_err(&["train", "--config", path.to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus"), "{stderr}");
    assert!(stderr.contains("line"), "{stderr}");
}

#[test]
fn params_compares_against_independent_models() {
    let out = run_ok(&[
        "params",
        "--preset",
        "m4-parallel-generic",
        "--frequencies",
        "yearly",
        "--compare-independent",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ratio"), "{stdout}");
    let ratio_line = stdout
        .lines()
        .find(|l| l.contains("ratio"))
        .unwrap()
        .to_string();
    let ratio: f64 = ratio_line
        .split("ratio ")
        .nth(1)
        .unwrap()
        .trim_end_matches(')')
        .parse()
        .unwrap();
    assert!((4.0..=6.0).contains(&ratio), "{ratio}");
}
