use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dpl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dpl(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_split_fit_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--nodes", "600", "--k", "3", "--rho", "0.05", "--beta", "0.9", "--seed", "3", "--edges", "g.tsv", "--labels", "t.tsv"]);
    ok(d, &["split", "--edges", "g.tsv", "--workers", "3", "--seed", "1", "--out", "p.txt"]);
    let partition = fs::read_to_string(d.join("p.txt")).unwrap();
    assert_eq!(partition.lines().next(), Some("3 200 1"));
    assert_eq!(partition.lines().count(), 601);

    ok(d, &["fit", "--edges", "g.tsv", "--k", "3", "--workers", "3", "--seed", "1", "--partition", "p.txt", "--out", "l.tsv", "--params", "p.json", "--ledger", "l.csv"]);
    let ledger = fs::read_to_string(d.join("l.csv")).unwrap();
    assert!(ledger.starts_with("round,bits_broadcast,bits_gathered,ops,objective\n"));
    let params: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(params["pi"].as_array().unwrap().len(), 3);

    let score: f64 = ok(d, &["eval", "--metric", "nmi", "--truth", "t.tsv", "--labels", "l.tsv"]).trim().parse().unwrap();
    assert!(score > 0.9, "nmi {score}");
    let red: f64 = ok(d, &["eval", "--metric", "red", "--edges", "g.tsv", "--labels", "l.tsv"]).trim().parse().unwrap();
    assert!(red < 0.5, "red {red}");

    // The same split drawn from the seed gives the same labels.
    ok(d, &["fit", "--edges", "g.tsv", "--k", "3", "--workers", "3", "--seed", "1", "--out", "l2.tsv"]);
    assert_eq!(fs::read(d.join("l.tsv")).unwrap(), fs::read(d.join("l2.tsv")).unwrap());
}

#[test]
fn indivisible_workers_name_the_nearest_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--nodes", "600", "--k", "2", "--rho", "0.05", "--edges", "g.tsv", "--labels", "t.tsv"]);
    let out = dpl(d, &["fit", "--edges", "g.tsv", "--k", "2", "--workers", "7", "--out", "l.tsv"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Some(6)") && err.contains("Some(8)"), "{err}");
}

#[test]
fn select_k_writes_a_score_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--nodes", "600", "--k", "3", "--rho", "0.05", "--beta", "0.9", "--edges", "g.tsv", "--labels", "t.tsv"]);
    ok(d, &["select-k", "--edges", "g.tsv", "--candidates", "2..4", "--workers", "3", "--out", "s.csv"]);
    let table = fs::read_to_string(d.join("s.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "k,loglik,penalty,score,degenerate,failed");
    assert_eq!(lines.len(), 4);
}

#[test]
fn dcsbm_with_initial_labels_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--model", "dcsbm", "--m", "4", "--nodes", "600", "--k", "2", "--pi", "0.3,0.7", "--rho", "0.05", "--edges", "g.tsv", "--labels", "t.tsv"]);
    ok(d, &["fit", "--model", "dcsbm", "--edges", "g.tsv", "--k", "2", "--workers", "2", "--init", "file", "--init-labels", "t.tsv", "--out", "l.tsv"]);
    let score: f64 = ok(d, &["eval", "--metric", "nmi", "--truth", "t.tsv", "--labels", "l.tsv"]).trim().parse().unwrap();
    assert!(score > 0.5, "nmi {score}");
    assert!(!dpl(d, &["fit", "--edges", "g.tsv", "--k", "2", "--workers", "2", "--init", "file", "--out", "x"]).status.success());
}

#[test]
fn bench_from_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("spec.toml"),
        r#"
name = "small"
reps = 3
methods = ["dpl", "pl-oracle"]

[[points]]
label = "n=100"
x = 100
num_nodes = 400
workers = 4
pi = [0.5, 0.5]
theta = { rho = 0.1, beta = 0.9 }
"#,
    )
    .unwrap();
    let stdout = ok(d, &["bench", "--spec", "spec.toml", "--reps", "2", "--out", "out"]);
    assert!(stdout.contains("small n=100 dpl"), "{stdout}");
    for f in ["small_replicates.csv", "small_summary.csv", "small_nmi.svg", "small_time.svg"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(d.join("out/small_replicates.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    assert!(!dpl(d, &["bench", "--out", "out"]).status.success());
}
