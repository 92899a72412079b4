//! End-to-end runs of the `nlcm` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nlcm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcm")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = nlcm(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

const SMALL_SIM: &[&str] = &["simulate", "--n", "180", "--items", "8", "--seed", "5"];
const QUICK_FIT: &[&str] = &["--restarts", "2", "--max-iters", "400", "--seed", "9"];

fn simulate_small(dir: &Path, out: &str) {
    let mut args = SMALL_SIM.to_vec();
    args.extend(["--out", out]);
    ok(dir, &args);
}

fn fit_args<'a>(input: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["fit", "--input", input, "--out", out];
    args.extend_from_slice(QUICK_FIT);
    args.extend_from_slice(extra);
    args
}

/// Fit that may or may not converge within the sweep cap.
fn fit_run(dir: &Path, args: &[&str]) {
    let out = nlcm(dir, args);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "a");
    simulate_small(tmp.path(), "b");
    for file in ["data.csv", "truth.json", "domain_tree.csv", "cause_tree.csv"] {
        assert_eq!(read(tmp.path().join("a").join(file)), read(tmp.path().join("b").join(file)), "{file}");
    }
    let truth = json(tmp.path().join("a/truth.json"));
    assert_eq!(truth["target_subjects"].as_array().unwrap().len(), 30);
    let manifest = json(tmp.path().join("a/manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["sim"]["seed"], 5);
}

#[test]
fn simulate_creates_nested_output_dirs() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "deep/er/out");
    assert!(tmp.path().join("deep/er/out/data.csv").is_file());
}

#[test]
fn odd_leaf_count_rejects_unbalanced_allocation() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("tree.csv"), "id,parent\nr,\n2,r\na,2\nb,2\n3,r\nc,3\nd,3\ne,r\n").unwrap();
    let out = nlcm(tmp.path(), &["simulate", "--domain-tree", "tree.csv", "--allocation", "unbalanced", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pairs domains") && err.contains('5'), "{err}");
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("sim.toml"), "out = \"from-file\"\n[sim]\nn = 240\nnum_items = 6\nseed = 2\n").unwrap();
    ok(tmp.path(), &["simulate", "--config", "sim.toml", "--n", "120"]);
    let truth = json(tmp.path().join("from-file/truth.json"));
    let sizes: u64 = truth["simulation"]["domain_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(sizes, 120);
    assert_eq!(truth["design"]["num_items"], 6);
}

#[test]
fn fit_outputs_are_byte_identical_across_reruns() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    fit_run(tmp.path(), &fit_args("sim", "f1", &[]));
    fit_run(tmp.path(), &fit_args("sim", "f2", &[]));
    for file in ["result.json", "e_matrix.csv", "pi_summary.csv", "cophenetic.csv", "elbo_trace.csv", "manifest.json"] {
        let a = read(tmp.path().join("f1").join(file));
        let b = read(tmp.path().join("f2").join(file));
        if file == "manifest.json" {
            assert_eq!(a.replace("\"f1\"", "\"f2\""), b);
        } else {
            assert_eq!(a, b, "{file}");
        }
    }
    let e = read(tmp.path().join("f1/e_matrix.csv"));
    assert_eq!(e.lines().next().unwrap(), "id,c1,c2,c3");
    assert_eq!(e.lines().count(), 31);

    // The manifest repeats the run.
    fit_run(tmp.path(), &["fit", "--config", "f1/manifest.json", "--out", "f3"]);
    assert_eq!(read(tmp.path().join("f1/result.json")), read(tmp.path().join("f3/result.json")));
}

#[test]
fn comparator_modes_differ_only_in_the_clamp() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    fit_run(tmp.path(), &fit_args("sim", "pool", &["--mode", "complete-pooling"]));
    fit_run(tmp.path(), &fit_args("sim", "adapt", &["--mode", "domain-adaptive"]));
    let mut a = json(tmp.path().join("pool/manifest.json"));
    let mut b = json(tmp.path().join("adapt/manifest.json"));
    assert_eq!(a["config"]["mode"], "complete-pooling");
    for m in [&mut a, &mut b] {
        let cfg = m["config"].as_object_mut().unwrap();
        cfg.remove("mode");
        cfg.remove("out");
    }
    assert_eq!(a, b);
    let pool = json(tmp.path().join("pool/result.json"));
    assert_eq!(pool["mode"], "complete-pooling");
    for row in pool["slab_prob"].as_array().unwrap() {
        let row = row.as_array().unwrap();
        assert_eq!(row[0], 1.0);
        assert!(row[1..].iter().all(|p| p == 0.0));
    }
}

#[test]
fn fixed_grouping_needs_a_slab_pattern() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    let out = nlcm(tmp.path(), &fit_args("sim", "x", &["--mode", "fixed-grouping"]));
    assert_eq!(out.status.code(), Some(1));
    fit_run(tmp.path(), &fit_args("sim", "g", &["--mode", "fixed-grouping", "--slab-on", "2,3,8,9"]));
    let r = json(tmp.path().join("g/result.json"));
    let nodes: Vec<&str> = r["domain_nodes"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let on: Vec<bool> = r["slab_prob"][0].as_array().unwrap().iter().map(|v| v == 1.0).collect();
    for (id, on) in nodes.iter().zip(on) {
        assert_eq!(on, ["1", "2", "3", "8", "9"].contains(id), "node {id}");
    }
}

#[test]
fn select_k_writes_the_criterion_table() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    let mut args = vec!["select-k", "--k", "1,2,3", "--input", "sim", "--out", "k"];
    args.extend_from_slice(QUICK_FIT);
    // K = 1 needs the diagnostic switch.
    let out = nlcm(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K = 1"));

    let mut args = vec!["select-k", "--k", "2,3", "--input", "sim", "--out", "k"];
    args.extend_from_slice(QUICK_FIT);
    fit_run(tmp.path(), &args);
    let table = read(tmp.path().join("k/k_selection.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "k,elbo,ln_k_factorial,criterion,converged,selected");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 1);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').take(4).map(|x| x.parse().unwrap()).collect();
        assert!((f[1] + f[2] - f[3]).abs() < 1e-9);
    }
    let r = json(tmp.path().join("k/result.json"));
    assert!(r["selected_k"].is_u64());
}

#[test]
fn non_convergence_exits_with_two_and_still_writes() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    let out = nlcm(tmp.path(), &["fit", "--input", "sim", "--out", "f", "--max-iters", "2", "--restarts", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(tmp.path().join("f/result.json"));
    assert_eq!(r["converged"], false);
    assert_eq!(read(tmp.path().join("f/elbo_trace.csv")).lines().count(), 3);
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = nlcm(tmp.path(), &["fit", "--input", "missing", "--out", "f"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
    let out = nlcm(tmp.path(), &["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(nlcm(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn perfect_result_scores_one() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    fit_run(tmp.path(), &fit_args("sim", "f", &[]));
    let truth = json(tmp.path().join("sim/truth.json"));
    let mut r = json(tmp.path().join("f/result.json"));
    r["pi0_mean"] = truth["target_csmf"].clone();
    let causes: Vec<String> = r["cause_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_owned()).collect();
    let subjects = truth["target_subjects"].as_array().unwrap();
    let labels = truth["target_causes"].as_array().unwrap();
    let mut probs = Vec::new();
    for id in r["target_subjects"].as_array().unwrap() {
        let t = subjects.iter().position(|s| s == id).unwrap();
        let y = labels[t].as_str().unwrap();
        probs.push(Value::from(causes.iter().map(|c| if c == y { 1.0 } else { 0.0 }).collect::<Vec<f64>>()));
    }
    r["target_cause_probs"] = Value::Array(probs);
    fs::write(tmp.path().join("f/result.json"), serde_json::to_string(&r).unwrap()).unwrap();

    ok(tmp.path(), &["evaluate", "--run", "f", "--out", "e"]);
    let summary = read(tmp.path().join("e/summary.csv"));
    assert!(summary.contains("domain-adaptive,csmf_accuracy,1,1,0,1,1"), "{summary}");
    assert!(summary.contains("domain-adaptive,top1_accuracy,1,1,0,1,1"), "{summary}");
}

#[test]
fn evaluate_without_truth_reports_dissimilarities_only() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim");
    fs::remove_file(tmp.path().join("sim/truth.json")).unwrap();
    fit_run(tmp.path(), &fit_args("sim", "f", &[]));
    ok(tmp.path(), &["evaluate", "--run", "f", "--out", "e"]);
    let report = json(tmp.path().join("e/report.json"));
    assert!(report["runs"][0]["evaluation"].is_null());
    assert_eq!(report["summary"].as_array().unwrap().len(), 0);
    assert_eq!(read(tmp.path().join("e/cophenetic_long.csv")).lines().count(), 1 + 3 * 5);
    assert!(!read(tmp.path().join("e/evaluation_long.csv")).contains("csmf_accuracy"));
}

#[test]
fn evaluate_aggregates_replicates_per_comparator() {
    let tmp = TempDir::new().unwrap();
    let mut args = SMALL_SIM.to_vec();
    args.extend(["--replicates", "2", "--out", "reps"]);
    ok(tmp.path(), &args);
    let mut runs = Vec::new();
    for rep in ["rep-001", "rep-002"] {
        let input = format!("reps/{rep}");
        for (label, mode) in [("adaptive", "domain-adaptive"), ("pooled", "complete-pooling")] {
            let out = format!("fits/{rep}/{label}");
            fit_run(tmp.path(), &fit_args(&input, &out, &["--mode", mode, "--label", label]));
            runs.push(out);
        }
    }
    let mut args = vec!["--jobs", "1", "evaluate", "--out", "e", "--run"];
    args.extend(runs.iter().map(String::as_str));
    ok(tmp.path(), &args);
    let summary = read(tmp.path().join("e/summary.csv"));
    for comparator in ["adaptive", "pooled"] {
        assert!(summary.contains(&format!("{comparator},csmf_accuracy,2,")), "{summary}");
    }
    let rmse = read(tmp.path().join("e/rmse.csv"));
    assert_eq!(rmse.lines().count(), 1 + 2 * 3);
    let long = read(tmp.path().join("e/evaluation_long.csv"));
    assert_eq!(long.lines().filter(|l| l.contains(",csmf_accuracy,")).count(), 4);
    assert_ne!(read(tmp.path().join("reps/rep-001/data.csv")), read(tmp.path().join("reps/rep-002/data.csv")));
}
