use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn covbound(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covbound"))
        .args(args)
        .env("COVBOUND_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn cover_on_csv_pair() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write(&a, "0.0,1\n0.2,1\n0.8,2\n1.0,2\n");
    write(&b, "0.1,1\n0.3,1\n0.7,2\n0.9,2\n");
    let o = covbound(
        &["cover", "--train", a.to_str().unwrap(), "--test", b.to_str().unwrap(), "--classes", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    for key in ["rho_T", "sc", "mc", "cd", "cc", "delta_T", "d", "K", "n_train", "n_test"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["schema_version"], 1);
    // every test point is 0.1 from its nearest train point
    assert!((v["rho_T"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!((v["delta_T"].as_f64().unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn bound_without_checkpoint_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = covbound(&["bound", "--generator", "synth1d"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--checkpoint"));
}

#[test]
fn usage_errors_and_help() {
    let dir = tempfile::tempdir().unwrap();
    let o = covbound(&["nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = covbound(&["cover", "--train", "x.csv", "--generator", "synth1d"], dir.path());
    assert_eq!(o.status.code(), Some(1), "file and generator sources conflict");
    let o = covbound(&["experiment", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("table-1d"));
}

#[test]
fn malformed_csv_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    write(&a, "0.1,1\nnot-a-number,2\n");
    let o = covbound(&["sepgap", "--train", a.to_str().unwrap(), "--classes", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_smoothness_and_bound_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let gen = ["--generator", "synth1d", "--n", "20", "--n-test", "500"];
    let mut args = vec!["train", "--iterations", "300", "--out", run.to_str().unwrap()];
    args.extend(gen);
    let o = covbound(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("checkpoint.json").exists());
    let log = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert!(log.starts_with("iteration,loss_mean,loss_max\n"));
    assert_eq!(log.lines().count(), 1 + 31);

    let ckpt = run.join("checkpoint.json");
    let mut args = vec!["smoothness", "--checkpoint", ckpt.to_str().unwrap()];
    args.extend(gen);
    let s = json(&covbound(&args, dir.path()));
    assert_eq!(s["estimator"], "grid");

    let mut args = vec!["bound", "--checkpoint", ckpt.to_str().unwrap()];
    args.extend(gen);
    let o = covbound(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let b = json(&o);
    assert_eq!(b["delta_f"], s["delta_f"]);
    if b["preconditions_met"] == true {
        assert_eq!(b["bound_holds"], true);
    }
}

#[test]
fn text_output_carries_json_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sepgap", "--generator", "synth2d", "--n", "10"];
    let j = json(&covbound(&args, dir.path()));
    let mut targs = vec!["--format", "text"];
    targs.extend(args);
    let text = String::from_utf8(covbound(&targs, dir.path()).stdout).unwrap();
    assert!(text.contains(&format!("delta_T: {}", j["delta_T"])));
}

#[test]
fn table_1d_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = covbound(
            &["experiment", "table-1d", "--seed", "7", "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = fs::read(a.join("table-1d/table.csv")).unwrap();
    let y = fs::read(b.join("table-1d/table.csv")).unwrap();
    assert_eq!(x, y);
    for f in ["config.json", "summary.json"] {
        assert!(a.join("table-1d").join(f).exists());
    }
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = covbound(&["experiment", "cc-fit"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("cc-fit/summary.json").exists());
    let v = json(&o);
    assert!((v["fit"]["slope"].as_f64().unwrap() - 0.014).abs() < 0.0014);
}
