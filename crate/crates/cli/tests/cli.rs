use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_snore");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SNORE_DATA_DIR").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Four 8-cliques joined in a ring; each clique is one class.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut edges = String::new();
    let mut labels = String::new();
    for c in 0..4 {
        for i in 0..8 {
            let u = c * 8 + i;
            labels.push_str(&format!("{u}\t{c}\n"));
            for j in i + 1..8 {
                edges.push_str(&format!("{u}\t{}\n", c * 8 + j));
            }
        }
        edges.push_str(&format!("{}\t{}\n", c * 8, ((c + 1) % 4) * 8 + 1));
    }
    let (e, l) = (dir.join("edges.tsv"), dir.join("labels.tsv"));
    fs::write(&e, edges).unwrap();
    fs::write(&l, labels).unwrap();
    (e, l)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK: [&str; 6] = ["--fractions", "0.25,0.5", "--shuffles", "2", "--reps", "2"];

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["embed", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, _) = fixture(tmp.path());
    let out = tmp.path().join("out");
    assert_eq!(code(&run(&["embed", "--bogus"])), 1);
    assert_eq!(code(&run(&["embed", "--edges", s(&edges)])), 1);
    // Digitization needs a bounded similarity.
    let o = run(&["embed", "--edges", s(&edges), "--out", s(&out), "--bins", "16", "--metric", "euclidean"]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
    let o = run(&["embed", "--edges", s(&edges), "--out", s(&out), "--dim", "33"]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
    assert_eq!(code(&run(&["--workers", "0", "stats", "--edges", s(&edges)])), 1);
    assert_eq!(code(&run(&["reproduce", "--dataset", "no-such-set", "--out", s(&out)])), 1);
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_two_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("missing.tsv");
    let o = run(&["embed", "--edges", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "0\t1\nx\t2\n").unwrap();
    let o = run(&["stats", "--edges", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.tsv:2:"));
}

#[test]
fn stats_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, labels) = fixture(tmp.path());
    let o = run(&["stats", "--edges", s(&edges), "--labels", s(&labels)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["nodes"], 32);
    assert_eq!(v["edges"], 4 * 28 + 4);
    assert_eq!(v["components"], 1);
    assert_eq!(v["classes"], 4);
}

#[test]
fn rank_is_descending() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, _) = fixture(tmp.path());
    let o = run(&["rank", "--edges", s(&edges)]);
    assert_eq!(code(&o), 0);
    let scores: Vec<f64> = stdout(&o).lines().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 32);
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-6);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, labels) = fixture(tmp.path());
    let mut dirs = Vec::new();
    for workers in ["1", "3"] {
        let emb = tmp.path().join(format!("emb{workers}"));
        let rep = tmp.path().join(format!("rep{workers}"));
        let o = run(&["--workers", workers, "embed", "--edges", s(&edges), "--out", s(&emb), "--dim", "16"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let mut args = vec!["--workers", workers, "eval", "--labels", s(&labels), "--embedding", s(&emb), "--out", s(&rep)];
        args.extend(QUICK);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push((emb, rep));
    }
    let (a, b) = (&dirs[0], &dirs[1]);
    for f in ["embedding.mtx", "features.tsv", "config.json", "run.json"] {
        assert_eq!(fs::read(a.0.join(f)).unwrap(), fs::read(b.0.join(f)).unwrap(), "{f}");
    }
    for f in ["report.json", "report.tsv", "run.json"] {
        assert_eq!(fs::read(a.1.join(f)).unwrap(), fs::read(b.1.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn eval_report_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, labels) = fixture(tmp.path());
    let emb = tmp.path().join("emb");
    assert_eq!(code(&run(&["embed", "--edges", s(&edges), "--out", s(&emb), "--sdf", "--budget-dim", "8"])), 0);
    for (name, extra) in [("snore", vec!["--embedding", s(&emb)]), ("lp", vec!["--baseline", "lp", "--edges", s(&edges)]), ("random", vec!["--baseline", "random", "--edges", s(&edges)])] {
        let out = tmp.path().join(name);
        let mut args = vec!["eval", "--labels", s(&labels), "--out", s(&out)];
        args.extend(extra);
        args.extend(QUICK);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "fraction\tmicro_mean\tmicro_std\tmacro_mean\tmacro_std");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("aggregate\t"));
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["cells"].as_array().unwrap().len(), 2 * 2 * 2);
        assert!(report["micro_mean"].as_f64().unwrap() <= 1.0);
    }
    // With half the nodes for training every clique is separable.
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("snore/report.json")).unwrap()).unwrap();
    assert!(report["fractions"][1]["micro_mean"].as_f64().unwrap() > 0.9);
}

#[test]
fn eval_rejects_labels_beyond_embedding() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, labels) = fixture(tmp.path());
    let emb = tmp.path().join("emb");
    assert_eq!(code(&run(&["embed", "--edges", s(&edges), "--out", s(&emb), "--dim", "4"])), 0);
    let mut extra = fs::read_to_string(&labels).unwrap();
    extra.push_str("40\t1\n");
    fs::write(&labels, extra).unwrap();
    let out = tmp.path().join("rep");
    let o = run(&["eval", "--labels", s(&labels), "--embedding", s(&emb), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn reproduce_writes_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir_all(data.join("cora")).unwrap();
    fixture(&data.join("cora"));
    let out = tmp.path().join("out");
    let mut args = vec!["reproduce", "--dataset", "Cora", "--data-dir", s(&data), "--out", s(&out), "--methods", "snore,lp,random"];
    args.extend(QUICK);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("comparison.tsv")).unwrap();
    let rows: Vec<_> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("snore\t") && rows[2].starts_with("label-propagation\t") && rows[3].starts_with("random\t"));
    for f in ["snore.json", "snore.tsv", "label-propagation.json", "random.json", "run.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
