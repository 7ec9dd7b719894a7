use std::process::{Command, Output};

use bellmem_cli::BatchRow;

fn bellmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = bellmem(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(bellmem(&["--help"]).status.code(), Some(0));
    assert_eq!(bellmem(&["bounds", "--n", "1000", "--delta", "0.1"]).status.code(), Some(0));
    // over the enumeration cap
    assert_eq!(bellmem(&["enumerate", "--strategy", "guessing", "--n", "12"]).status.code(), Some(2));
    assert_eq!(bellmem(&["simulate", "--strategy", "nope", "--n", "10"]).status.code(), Some(2));
    assert_eq!(bellmem(&["table", "--n", "1000", "--delta", "0.3"]).status.code(), Some(2));
    assert_eq!(bellmem(&["enumerate", "--strategy", "collective-n2", "--n", "3"]).status.code(), Some(2));
    assert_eq!(bellmem(&["simulate", "--strategy", "stochastic-lhv", "--n", "10"]).status.code(), Some(2));
}

#[test]
fn collective_enumeration_reports_ten_of_sixteen() {
    let text = stdout(&["enumerate", "--strategy", "collective-n2", "--n", "2"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["p_all_rounds_score"]["sequences"], "10/16");
    assert_eq!(v["p_all_rounds_score"]["rational"], "5/8");
    assert_eq!(v["independent_rounds_ceiling"]["rational"], "9/16");
    assert_eq!(v["exceeds_ceiling"], true);
}

#[test]
fn guessing_enumeration_is_exact() {
    let text = stdout(&["enumerate", "--strategy", "guessing", "--n", "4"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["e_x_conditional"]["rational"], "15/4");
    assert_eq!(v["e_y"]["rational"], "3/1");
    assert_eq!(v["sequences"], 256);
}

#[test]
fn model101_enumeration() {
    let text = stdout(&["enumerate", "--strategy", "model101", "--n", "101"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["e_x_conditional_on_trigger"]["rational"], "53/17");
    assert!(v["e_x_excess"]["decimal"].as_f64().unwrap() > 0.0);
}

#[test]
fn table_marks_collective_unknowns() {
    let text = stdout(&["table", "--n", "1000", "--delta", "0.1", "--format", "csv"]);
    let collective = text.lines().find(|l| l.starts_with("Collective")).unwrap();
    assert_eq!(collective, "Collective,unknown,unknown,bound:3,unknown");
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(3), Some("bound:3"));
    }
}

#[test]
fn nosig_guessing_passes() {
    let text = stdout(&["nosig", "--strategy", "guessing", "--n", "5"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["check"]["result"], "pass");
}

#[test]
fn nosig_mixture_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    std::fs::write(&path, "weight,a1,a2,b1,b2\n1/2,+1,+1,+1,+1\n1/2,-1,+1,-1,+1\n").unwrap();
    let p = path.to_str().unwrap();
    let out = bellmem(&["nosig", "--strategy", "stochastic-lhv", "--strategy-file", p, "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&["simulate", "--strategy", "stochastic-lhv", "--strategy-file", p, "--n", "20", "--batches", "5"]);
    assert!(text.contains("stochastic-lhv"));
}

#[test]
fn simulate_csv_and_json_batches_agree() {
    let args = ["simulate", "--strategy", "guessing", "--n", "50", "--batches", "40", "--seed", "3"];
    let csv_text = stdout(&[&args[..], &["--format", "csv"]].concat());
    let from_csv: Vec<BatchRow> = csv::Reader::from_reader(csv_text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&args)).unwrap();
    let from_json: Vec<BatchRow> = serde_json::from_value(json["batches"].clone()).unwrap();
    assert_eq!(from_csv.len(), 40);
    assert_eq!(from_csv, from_json);
    for row in &from_csv {
        assert_eq!(row.n11 + row.n12 + row.n21 + row.n22, 50);
        assert_eq!(row.x_defined, !row.x_value.is_empty());
    }
}

#[test]
fn seeds_change_output() {
    let a = stdout(&["simulate", "--strategy", "quantum", "--n", "100", "--batches", "10", "--seed", "1"]);
    let b = stdout(&["simulate", "--strategy", "quantum", "--n", "100", "--batches", "10", "--seed", "2"]);
    assert_ne!(a, b);
}
