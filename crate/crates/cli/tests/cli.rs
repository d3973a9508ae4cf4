use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kgjoint(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgjoint"))
        .args(args)
        .current_dir(cwd)
        .env("KGJOINT_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = kgjoint(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    kgjoint(args, cwd).status.code().expect("exit code")
}

fn json(text: &str) -> Value {
    serde_json::from_str(text.trim().lines().last().unwrap()).unwrap()
}

fn lattice(dir: &Path) {
    ok(&["make-synthetic", "--out", "lat", "--entities", "60", "--relations", "4", "--grid-dim", "2"], dir);
}

const LAT_SPLITS: [&str; 6] = ["--train", "lat/train.txt", "--valid", "lat/valid.txt", "--test", "lat/test.txt"];

#[test]
fn synthetic_generators_and_stats_agree() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let stats =
        json(&ok(&["make-synthetic", "--out", "lat", "--entities", "60", "--relations", "4", "--grid-dim", "2"], dir));
    assert_eq!(stats["entities"], 60);
    assert_eq!(stats["relations"], 4);
    let again = json(&ok(&["stats", "--dir", "lat"], dir));
    assert_eq!(stats, again);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("lat/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["extra"]["planted_offsets"].as_array().unwrap().len(), 4);

    let clusters = json(&ok(
        &[
            "make-synthetic",
            "--kind",
            "clusters",
            "--out",
            "cl",
            "--entities",
            "40",
            "--clusters",
            "4",
            "--relations",
            "2",
        ],
        dir,
    ));
    assert_eq!(clusters["entities"], 40);
    assert!(dir.join("cl/literals.leb1").is_file());
    assert_eq!(code(&["make-synthetic", "--out", "x", "--clusters", "3"], dir), 1);
}

#[test]
fn empty_training_file_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("train.txt"), "").unwrap();
    assert_eq!(code(&["stats", "--train", "train.txt"], tmp.path()), 2);
    assert_eq!(code(&["stats", "--train", "missing.txt"], tmp.path()), 1);
}

#[test]
fn malformed_triples_are_a_data_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("train.txt"), "a\tr\tb\nonly\ttwo\n").unwrap();
    assert_eq!(code(&["stats", "--train", "train.txt"], tmp.path()), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&["train-structural", "--no-such-flag"], tmp.path()), 1);
    assert_eq!(code(&["train-structural", "--lr", "fast"], tmp.path()), 1);
    assert_eq!(code(&["nonsense"], tmp.path()), 1);
    assert_eq!(code(&["--help"], tmp.path()), 0);
    lattice(tmp.path());
    let mut args = vec!["train-structural", "--out", "m.ckpt", "--norm", "3"];
    args.extend(LAT_SPLITS);
    assert_eq!(code(&args, tmp.path()), 1);
}

#[test]
fn structural_training_then_repeatable_evaluation() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    lattice(dir);
    let mut train = vec!["train-structural", "--out", "s.ckpt", "--lr", "0.0005", "--batch", "256", "--margin", "1"];
    train.extend(["--dim", "20", "--epochs", "30", "--seed", "3", "--no-early-stop"]);
    train.extend(LAT_SPLITS);
    let summary = json(&ok(&train, dir));
    assert_eq!(summary["epochs_run"], 30);
    assert!(dir.join("s.ckpt.manifest.json").is_file());

    let mut eval = vec!["eval", "--checkpoint", "s.ckpt", "--report", "r1.json"];
    eval.extend(LAT_SPLITS);
    ok(&eval, dir);
    eval[4] = "r2.json";
    ok(&eval, dir);
    let r1 = fs::read(dir.join("r1.json")).unwrap();
    assert_eq!(r1, fs::read(dir.join("r2.json")).unwrap());
    assert_eq!(fs::read(dir.join("r1.json.ranks.tsv")).unwrap(), fs::read(dir.join("r2.json.ranks.tsv")).unwrap());

    let report: Value = serde_json::from_slice(&r1).unwrap();
    let test_lines = fs::read_to_string(dir.join("lat/test.txt")).unwrap().lines().count();
    assert_eq!(report["queries"], 2 * test_lines);
    let ranks = fs::read_to_string(dir.join("r1.json.ranks.tsv")).unwrap();
    assert_eq!(ranks.lines().count(), 1 + 2 * test_lines);
    let all = &report["all"];
    assert!(all["mr_filtered"].as_f64().unwrap() <= all["mr_raw"].as_f64().unwrap());

    // Stdout report matches the file; --test alone is enough for eval.
    let stdout = ok(&["eval", "--checkpoint", "s.ckpt", "--test", "lat/test.txt", "--threads", "1"], dir);
    let raw_only: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(raw_only["all"]["mr_raw"], all["mr_raw"]);
    assert_eq!(code(&["eval", "--checkpoint", "s.ckpt"], dir), 1);
}

#[test]
fn identical_runs_write_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    lattice(dir);
    for out in ["a.ckpt", "b.ckpt"] {
        let mut args = vec!["train-structural", "--out", out, "--dim", "10", "--epochs", "20", "--seed", "9"];
        args.extend(LAT_SPLITS);
        ok(&args, dir);
    }
    assert_eq!(fs::read(dir.join("a.ckpt")).unwrap(), fs::read(dir.join("b.ckpt")).unwrap());
    let strip = |name: &str| {
        let mut m: Value = serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
        m["settings"]["out"] = Value::Null;
        m["outputs"] = Value::Null;
        m
    };
    assert_eq!(strip("a.ckpt.manifest.json"), strip("b.ckpt.manifest.json"));
}

#[test]
fn joint_training_requires_literals_unless_allowed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    lattice(dir);
    let mut s = vec!["train-structural", "--out", "s.ckpt", "--dim", "8", "--epochs", "5"];
    s.extend(LAT_SPLITS);
    ok(&s, dir);

    let mut joint = vec!["train-joint", "--checkpoint", "s.ckpt", "--out", "j.ckpt", "--epochs", "5"];
    joint.extend(LAT_SPLITS);
    assert_eq!(code(&joint, dir), 1);
    joint.push("--allow-zero-literals");
    ok(&joint, dir);

    let mut eval = vec!["eval", "--checkpoint", "j.ckpt"];
    eval.extend(LAT_SPLITS);
    let report = json(&ok(&eval, dir));
    assert!(report["all"]["mr_raw"].as_f64().unwrap().is_finite());

    let mut both = vec!["train-joint", "--checkpoint", "s.ckpt", "--skip-structural", "--out", "x.ckpt"];
    both.extend(["--allow-zero-literals", "--train", "lat/train.txt"]);
    assert_eq!(code(&both, dir), 1);
    let chain = [
        "train-joint",
        "--checkpoint",
        "j.ckpt",
        "--allow-zero-literals",
        "--train",
        "lat/train.txt",
        "--out",
        "y.ckpt",
    ];
    assert_eq!(code(&chain, dir), 1);
}

#[test]
fn train_all_with_literals_writes_everything() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        &[
            "make-synthetic",
            "--kind",
            "clusters",
            "--out",
            "cl",
            "--entities",
            "40",
            "--clusters",
            "4",
            "--relations",
            "2",
        ],
        dir,
    );
    let out = ok(
        &[
            "train-all",
            "--train",
            "cl/train.txt",
            "--valid",
            "cl/valid.txt",
            "--test",
            "cl/test.txt",
            "--literals",
            "cl/literals.leb1",
            "--dim",
            "8",
            "--epochs",
            "10",
            "--joint-epochs",
            "5",
            "--joint-dim",
            "6",
            "--out-dir",
            "run",
        ],
        dir,
    );
    let summary = json(&out);
    assert_eq!(summary["structural"]["epochs_run"], 10);
    assert_eq!(summary["joint"]["epochs_run"], 5);
    for f in ["structural.ckpt", "joint.ckpt", "report.structural.json", "report.joint.json", "manifest.json"] {
        assert!(dir.join("run").join(f).is_file(), "{f} missing");
    }
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.join("run/report.joint.json")).unwrap()).unwrap();
    assert_eq!(summary["test"]["joint"], file);

    // The saved joint checkpoint evaluates to the same report.
    let again = json(&ok(
        &[
            "eval",
            "--checkpoint",
            "run/joint.ckpt",
            "--train",
            "cl/train.txt",
            "--valid",
            "cl/valid.txt",
            "--test",
            "cl/test.txt",
        ],
        dir,
    ));
    assert_eq!(again, file);
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    lattice(dir);
    fs::write(
        dir.join("run.conf"),
        "# structural run\ntrain = lat/train.txt\ndim = 6\nepochs = 7\nout = from-file.ckpt\nno_early_stop = true\n",
    )
    .unwrap();
    let summary = json(&ok(&["train-structural", "--config", "run.conf", "--epochs", "3"], dir));
    assert_eq!(summary["epochs_run"], 3);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("from-file.ckpt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["settings"]["dim"], 6);
    assert_eq!(manifest["settings"]["epochs"], 3);

    fs::write(dir.join("bad.conf"), "train = lat/train.txt\nout = z.ckpt\nlearning_speed = 2\n").unwrap();
    assert_eq!(code(&["train-structural", "--config", "bad.conf"], dir), 1);
    assert!(!dir.join("z.ckpt").exists());
}

#[test]
fn gradcheck_reports_small_errors() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["gradcheck", "--joint", "--dim", "4"], tmp.path());
    let last = out.lines().last().unwrap();
    let value: f64 =
        last.strip_prefix("max relative error ").and_then(|r| r.split_whitespace().next()).unwrap().parse().unwrap();
    assert!(value < 1e-4, "{last}");

    let json_out = ok(&["gradcheck", "--gru", "--json", "--literal-dim", "5"], tmp.path());
    let report: Value = serde_json::from_str(json_out.lines().next().unwrap()).unwrap();
    assert_eq!(report["target"], "gru");
    assert_eq!(code(&["gradcheck", "--dim", "0"], tmp.path()), 1);
}
