use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aignet::aig::aiger::read_aig;

fn aignet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aignet")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = aignet(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

const SMALL: &[&str] = &["--layers", "2", "--hidden", "8", "--epochs", "4", "--batch", "4", "--patterns", "2048", "--pairs", "20"];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn gen_writes_requested_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--count", "10", "--pis", "6", "--ands", "40", "--seed", "1", "--out", "dir/"]);
    let files: Vec<_> = fs::read_dir(dir.path().join("dir")).unwrap().collect();
    assert_eq!(files.len(), 10);
}

#[test]
fn train_without_data_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = aignet(dir.path(), &["train", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_and_bad_values_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(aignet(dir.path(), &["gen", "--count", "1", "--pis", "2", "--ands", "2", "--out", "g", "--bogus"]).status.code(), Some(1));
    assert_eq!(aignet(dir.path(), &["gen", "--count", "1", "--pis", "0", "--ands", "2", "--out", "g"]).status.code(), Some(1));
    assert_eq!(aignet(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(aignet(dir.path(), &["report", "absent.jsonl"]).status.code(), Some(2));
    assert_eq!(aignet(dir.path(), &["train", "--data", "absent", "--out", "r"]).status.code(), Some(2));
    assert_eq!(aignet(dir.path(), &["convert", "absent.aag", "--out", "x.aig"]).status.code(), Some(2));
}

#[test]
fn convert_round_trips_between_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--count", "1", "--pis", "5", "--ands", "30", "--seed", "4", "--out", "g"]);
    ok(d, &["convert", "g/gen_0000.aag", "--out", "x.aig"]);
    ok(d, &["convert", "x.aig", "--out", "y.aag"]);
    let a = read_aig(&fs::read(d.join("g/gen_0000.aag")).unwrap(), "a").unwrap();
    let b = read_aig(&fs::read(d.join("x.aig")).unwrap(), "b").unwrap();
    let c = read_aig(&fs::read(d.join("y.aag")).unwrap(), "c").unwrap();
    assert!(a.isomorphic(&b) && a.isomorphic(&c));
    assert_eq!(aignet(d, &["convert", "x.aig", "--out", "y.txt"]).status.code(), Some(1));
}

#[test]
fn malformed_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.aag"), "aag 1 1 0\n").unwrap();
    assert_eq!(aignet(d, &["convert", "bad.aag", "--out", "x.aig"]).status.code(), Some(1));
    fs::write(d.join("m.jsonl"), "not json\n").unwrap();
    assert_eq!(aignet(d, &["report", "m.jsonl"]).status.code(), Some(1));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--count", "3", "--pis", "3", "--ands", "6", "--out", "g"]);
    fs::write(d.join("c.json"), r#"{"patterns": 1024, "truth_pis": 4}"#).unwrap();
    let out = ok(d, &["label", "--data", "g", "--out", "l.jsonl", "--config", "c.json", "--truth-pis", "6"]);
    let first = out.lines().next().unwrap();
    let cfg: serde_json::Value = serde_json::from_str(first.strip_prefix("config ").unwrap()).unwrap();
    assert_eq!(cfg["patterns"], 1024);
    assert_eq!(cfg["truth_pis"], 6);
    assert_eq!(cfg["layers"], 12);
    fs::write(d.join("bad.json"), r#"{"layerz": 3}"#).unwrap();
    assert_eq!(aignet(d, &["label", "--data", "g", "--out", "l.jsonl", "--config", "bad.json"]).status.code(), Some(1));
}

fn pipeline(d: &Path) -> String {
    let mut log = ok(d, &["gen", "--count", "12", "--pis", "6", "--ands", "30", "--seed", "7", "--out", "corpus"]);
    log += &ok(d, &with(&["label", "--data", "corpus", "--out", "labels.jsonl"], SMALL));
    let train = with(&["train", "--data", "corpus", "--labels", "labels.jsonl", "--out", "run", "--split", "0.5,0.2", "--seed", "5", "--no-timing"], SMALL);
    log += &ok(d, &train);
    log += &ok(d, &with(&["eval", "--data", "corpus", "--labels", "labels.jsonl", "--checkpoint", "run/model.json", "--split", "0.5,0.2", "--seed", "5", "--out", "eval.jsonl"], SMALL));
    log
}

#[test]
fn end_to_end_pipeline_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let log_a = pipeline(a.path());
    assert_eq!(log_a, pipeline(b.path()));
    for f in ["labels.jsonl", "run/model.json", "run/model.bin", "run/metrics.jsonl", "run/report.json", "eval.jsonl"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert!(log_a.contains("\"metric\":\"spp_mae\"") && log_a.contains("\"metric\":\"ttdp_mae\""));
    assert!(!log_a.contains("t_avg\""), "timing leaked under --no-timing");
    // evaluating the saved checkpoint on the same split reproduces the training report
    let metric = |file: &str, m: &str| {
        let text = fs::read_to_string(a.path().join(file)).unwrap();
        text.lines().find(|l| l.contains(&format!("\"metric\":\"{m}\""))).map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["value"].as_f64().unwrap()
        })
    };
    assert_eq!(metric("run/metrics.jsonl", "spp_mae"), metric("eval.jsonl", "spp_mae"));
    assert_eq!(metric("run/metrics.jsonl", "ttdp_mse"), metric("eval.jsonl", "ttdp_mse"));
}

#[test]
fn report_sorts_runs_and_renders_ablation_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--count", "8", "--pis", "5", "--ands", "20", "--seed", "2", "--out", "corpus"]);
    let mut files = Vec::new();
    for (name, flag) in [("full", None), ("sum", Some("--sum-agg")), ("nodec", Some("--no-basis")), ("single", Some("--single-embedding"))] {
        let out = format!("runs/{name}");
        let mut args = with(&["train", "--data", "corpus", "--out", &out, "--split", "0.5,0.2", "--task", "spp"], SMALL);
        args.extend(flag);
        ok(d, &args);
        files.push(format!("{out}/metrics.jsonl"));
    }
    let one = ok(d, &["report", &files[0]]);
    assert_eq!(one.lines().count(), 3, "{one}");
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    let table = ok(d, &with(&["report"], &refs));
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 4, "{table}");
    let maes: Vec<f64> = rows.iter().map(|r| r.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert!(maes.windows(2).all(|w| w[0] <= w[1]), "{table}");
    for v in ["AIGer ", "AIGer(Sum_Agg)", "AIGer(NoDec)", "AIGer(Single_Emb)"] {
        assert!(table.contains(v), "{v} missing from\n{table}");
    }
}
