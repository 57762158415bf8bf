use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmdp_core::fixtures::{m1, m2};
use rmdp_core::{Rmdp, SolveReport, Tbsg};
use tempfile::TempDir;

fn rmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmdp")).args(args).output().expect("binary runs")
}

fn write_model(dir: &TempDir, name: &str, m: &Rmdp) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, m.to_json()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_m1_with_rppi() {
    let dir = TempDir::new().unwrap();
    let input = write_model(&dir, "m1.json", &m1());
    let out = rmdp(&["solve", s(&input), "--algorithm", "rppi"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: SolveReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report.value_at_initial, 5.0);
    assert!(report.is_consistent(0, 1));
}

#[test]
fn every_algorithm_reports_m2() {
    let dir = TempDir::new().unwrap();
    let input = write_model(&dir, "m2.json", &m2());
    for algorithm in ["rppi", "rvi", "rrvi", "brute"] {
        let report_path = dir.path().join(format!("{algorithm}.json"));
        let out = rmdp(&["solve", s(&input), "--algorithm", algorithm, "--output", s(&report_path)]);
        assert_eq!(out.status.code(), Some(0), "{algorithm}: {}", String::from_utf8_lossy(&out.stderr));
        let report: SolveReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
        assert!((report.value_at_initial - 0.375).abs() <= 1e-3, "{algorithm}: {}", report.value_at_initial);
        assert_eq!(report.algorithm.name(), algorithm);
    }
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(rmdp(&["solve", s(&bad)]).status.code(), Some(2));
    let mut invalid = m2();
    invalid.polytopes[0][0].vertices[0].0 = vec![0.7, 0.7];
    let invalid = write_model(&dir, "invalid.json", &invalid);
    assert_eq!(rmdp(&["solve", s(&invalid)]).status.code(), Some(2));
    assert_eq!(rmdp(&["solve", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn brute_over_budget_exits_4() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("c.json");
    let out = rmdp(&["gen", "--seed", "3", "--output", s(&model), "contamination", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let out = rmdp(&["solve", s(&model), "--algorithm", "brute", "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn timeout_exits_3() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("c.json");
    rmdp(&["gen", "--output", s(&model), "contamination", "--n", "10"]);
    let out = rmdp(&["solve", s(&model), "--algorithm", "rrvi", "--reference", "1e9", "--timeout", "0.2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = write_model(&dir, "m2.json", &m2());
    let policy = dir.path().join("policy.json");
    std::fs::write(&policy, r#"{"s0": "a0", "s1": "a0"}"#).unwrap();

    let out = rmdp(&["verify", s(&input), "--policy", s(&policy), "--threshold", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["inf_value"].as_f64().unwrap() - 0.375).abs() < 1e-9);

    let out = rmdp(&["verify", s(&input), "--policy", s(&policy), "--threshold", "0.4"]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(&policy, r#"{"s0": "a0"}"#).unwrap();
    let out = rmdp(&["verify", s(&input), "--policy", s(&policy), "--threshold", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reduce_writes_a_game() {
    let dir = TempDir::new().unwrap();
    let input = write_model(&dir, "m2.json", &m2());
    let out = rmdp(&["reduce", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let g = Tbsg::from_json(&stdout(&out)).unwrap();
    assert_eq!((g.n_max(), g.n_min(), g.n_min_actions), (2, 2, 4));
}

#[test]
fn generators_are_seeded() {
    let a = rmdp(&["gen", "--seed", "7", "tiny", "--states", "3", "--actions", "2"]);
    let b = rmdp(&["gen", "--seed", "7", "tiny", "--states", "3", "--actions", "2"]);
    let c = rmdp(&["gen", "--seed", "8", "tiny", "--states", "3", "--actions", "2"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    Rmdp::from_json(&stdout(&a)).unwrap();

    let lake = rmdp(&["gen", "frozen-lake", "--n", "3", "--variant", "multichain", "--holes", "1,1"]);
    assert_eq!(Rmdp::from_json(&stdout(&lake)).unwrap().n_states(), 9);
    let bad = rmdp(&["gen", "frozen-lake", "--n", "3", "--holes", "0,0"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_frozen_lake_unichain() {
    let out = rmdp(&[
        "bench",
        "--jobs",
        "2",
        "--family",
        "frozen-lake-unichain",
        "--sizes",
        "2,3,4",
        "--algorithms",
        "rppi,rvi",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("family,n,seed,algorithm,value,wall_clock_seconds,status\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[6] == "ok"));
    for pair in rows.chunks(2) {
        assert_eq!((pair[0][3].as_str(), pair[1][3].as_str()), ("rppi", "rvi"));
        let (a, b): (f64, f64) = (pair[0][4].parse().unwrap(), pair[1][4].parse().unwrap());
        assert!((a - b).abs() <= 1e-3);
    }
}

#[test]
fn bench_marks_inapplicable_and_is_deterministic() {
    let args = ["bench", "--family", "frozen-lake-multichain,contamination", "--sizes", "2,3", "--seeds", "0,1"];
    let first = csv_rows(&stdout(&rmdp(&args)));
    let second = csv_rows(&stdout(&rmdp(&args)));
    let strip = |rows: &[Vec<String>]| rows.iter().map(|r| [&r[..5], &r[6..]].concat()).collect::<Vec<_>>();
    assert_eq!(strip(&first), strip(&second));
    let multichain: Vec<_> = first.iter().filter(|r| r[0] == "frozen-lake-multichain").collect();
    assert!(multichain.iter().filter(|r| r[3] != "rppi").all(|r| r[6] == "inapplicable"));
    assert!(first.iter().filter(|r| r[0] == "contamination").all(|r| r[6] == "ok"));
}
