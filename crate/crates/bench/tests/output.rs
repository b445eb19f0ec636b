use dpl_bench::run::fit_method;
use dpl_bench::{run_experiment, ExperimentSpec, Method, RunOptions};
use dpl_core::metrics::nmi;

const SPEC: &str = r#"
name = "smoke"
reps = 3
base_seed = 11
methods = ["dpl", "dcpl"]
red = true

[[points]]
label = "sparse"
x = 0.05
num_nodes = 300
workers = 3
pi = [0.4, 0.6]
theta = { rho = 0.05, beta = 0.8 }

[[points]]
label = "dense"
x = 0.1
num_nodes = 300
workers = 3
pi = [0.4, 0.6]
theta = { rho = 0.1, beta = 0.8 }
heterogeneity = 2.0
"#;

#[test]
fn writes_tables_and_figures() {
    let spec = ExperimentSpec::from_toml(SPEC).unwrap();
    let mut report = run_experiment(&spec, &RunOptions::default()).unwrap();
    report.check_trend("trend", "", Method::Dpl);
    let dir = tempfile::tempdir().unwrap();
    let files = report.write(dir.path()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in [
        "smoke_replicates.csv",
        "smoke_summary.csv",
        "smoke_checks.csv",
        "smoke_nmi.svg",
        "smoke_time.svg",
        "smoke_red.svg",
    ] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }

    let mut rdr = csv::Reader::from_path(dir.path().join("smoke_replicates.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "seed"));
    assert_eq!(rdr.records().count(), 2 * 3 * 2);

    let svg = std::fs::read_to_string(dir.path().join("smoke_nmi.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(report.summary.len(), 4);
}

#[test]
fn a_row_is_reproduced_from_its_seed() {
    let spec = ExperimentSpec::from_toml(SPEC).unwrap();
    let report = run_experiment(&spec, &RunOptions::default()).unwrap();
    let row = report.rows.iter().find(|r| r.point == "dense" && r.method == Method::Dcpl && r.seed == 12).unwrap();
    let point = spec.points.iter().find(|p| p.label == row.point).unwrap();
    let net = point.generate(row.seed).unwrap();
    let fit = fit_method(&net.graph, point, row.method, row.seed).unwrap();
    assert_eq!(nmi(&net.truth, &fit.labels).unwrap(), row.nmi);
    assert_eq!(fit.ledger.total_ops(), row.total_ops);
}
