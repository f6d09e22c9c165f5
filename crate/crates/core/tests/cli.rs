use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn qkinfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkinfer")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn infer_matches_golden_output() {
    let ds = fixture("n2_n4_seed7.json");
    let o = qkinfer(&[
        "infer", "--dataset", ds.to_str().unwrap(), "--strategy", "all-at-once-qae", "--epsilon", "0.05", "--seed", "42",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let golden = fs::read_to_string(fixture("golden/infer_n2_n4_seed7_all_at_once_qae.txt")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn identity_fixture_estimates_alpha_sum() {
    let ds = fixture("identity.json");
    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ds).unwrap()).unwrap();
    let sum: f64 = file["alpha"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).sum();
    for s in ["list-sum-fixed-sampling", "all-at-once-qae", "sample-average"] {
        let o = qkinfer(&["infer", "--dataset", ds.to_str().unwrap(), "--strategy", s, "--epsilon", "0.1", "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!((field(&text, "exact") - sum).abs() < 1e-12);
        assert!((field(&text, "estimate") - sum).abs() <= 0.1, "{s}: {text}");
    }
}

#[test]
fn explicit_query_point() {
    let ds = fixture("n2_n4_seed7.json");
    let o = qkinfer(&[
        "infer", "--dataset", ds.to_str().unwrap(), "--x", "-0.5,1.25", "--strategy", "list-sum-adaptive-qae",
        "--epsilon", "0.05",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("allocation: "));
    let bad = qkinfer(&["infer", "--dataset", ds.to_str().unwrap(), "--x", "0.1", "--strategy", "all", "--epsilon", "0.05"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn malformed_dataset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\"format_version\": 1, \"alpha\": [1.0]").unwrap();
    let o = qkinfer(&["infer", "--dataset", path.to_str().unwrap(), "--strategy", "all", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json"));
}

#[test]
fn missing_dataset_exits_1() {
    let o = qkinfer(&["infer", "--dataset", "/nonexistent/x.json", "--strategy", "all", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulator_overflow_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.json");
    let p = path.to_str().unwrap();
    let g = qkinfer(&["gen-fixture", "--out", p, "--qubits", "12", "--points", "16", "--layers", "1"]);
    assert_eq!(g.status.code(), Some(0));
    let o = qkinfer(&["infer", "--dataset", p, "--strategy", "all-at-once-qae", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qubits"));
    let ok = qkinfer(&["infer", "--dataset", p, "--strategy", "list-sum-fixed-sampling", "--epsilon", "0.1"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn benchmark_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture("default.json");
    let o = qkinfer(&[
        "benchmark", "--dataset", ds.to_str().unwrap(), "--strategy", "all-at-once-sampling", "--epsilon", "0.1,0.05",
        "--trials", "2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(csv.lines().next().unwrap(), qkinfer::harness::CSV_HEADER);
    assert_eq!(qkinfer::harness::parse_csv(&csv).unwrap().len(), 4);
    assert!(dir.path().join("plotdata.tsv").exists());
}

#[test]
fn benchmark_reruns_are_identical() {
    let ds = fixture("default.json");
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let o = qkinfer(&[
                "benchmark", "--dataset", ds.to_str().unwrap(), "--trials", "5", "--seed", "9", "--out",
                dir.path().to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0));
            fs::read(dir.path().join("results.csv")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn recommend_from_dataset() {
    let ds = fixture("default.json");
    let q = qkinfer(&["recommend", "--dataset", ds.to_str().unwrap(), "--epsilon", "0.01", "--criterion", "queries"]);
    assert_eq!(q.status.code(), Some(0));
    assert!(stdout(&q).lines().nth(1).unwrap().contains("all-at-once-qae"));
    let g = qkinfer(&["recommend", "--dataset", ds.to_str().unwrap(), "--epsilon", "0.01", "--criterion", "gates"]);
    assert!(stdout(&g).lines().nth(1).unwrap().contains("list-sum-adaptive-qae"));
}

#[test]
fn validate_levels() {
    let o = qkinfer(&["validate", "--level", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("6 of 6 criteria passed"));
    assert_eq!(qkinfer(&["validate", "--level", "thorough"]).status.code(), Some(2));
}

#[test]
fn gen_fixture_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let o = qkinfer(&["gen-fixture", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), fs::read(fixture("default.json")).unwrap());
}

#[test]
fn recommend_flags_out_of_range_epsilon() {
    let args = ["recommend", "--g", "12", "--n-terms", "2", "--n", "3", "--alpha", "0.5,-0.5", "--criterion", "gates"];
    let inside = qkinfer(&[&args[..], &["--epsilon", "0.1"]].concat());
    let outside = qkinfer(&[&args[..], &["--epsilon", "0.9"]].concat());
    assert!(!stdout(&inside).contains("note:"));
    assert!(stdout(&outside).contains("note:"));
}
