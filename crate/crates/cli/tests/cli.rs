use std::fs;
use std::process::{Command, Output};

fn torec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torec")).args(args).output().expect("run torec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn value_of(text: &str, quantity: &str) -> String {
    csv_rows(text).into_iter().find(|r| r[0] == quantity).map(|r| r[1].clone()).unwrap()
}

#[test]
fn spectrum_of_the_cat_map() {
    let o = torec(&["spectrum", "2", "1", "1", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lambda: f64 = value_of(&out, "lambda").parse().unwrap();
    assert!((lambda - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
    assert_eq!(value_of(&out, "lambda"), "2.61803398875");
    // eigendirections are present
    for q in ["unstable_dir_x", "unstable_dir_y", "stable_dir_x", "stable_dir_y"] {
        value_of(&out, q).parse::<f64>().unwrap();
    }
}

#[test]
fn precision_flag_controls_digits() {
    let o = torec(&["--precision", "4", "spectrum", "2", "1", "1", "1"]);
    assert_eq!(value_of(&stdout(&o), "lambda"), "2.618");
}

#[test]
fn dim_grid_passes_through_one_at_the_first_threshold() {
    let o = torec(&["dim", "--grid", "0.001"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let t = 3.0 - 2.0 * 2f64.sqrt();
    let row = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - t).abs() < 1e-11).expect("threshold row");
    assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    // grid endpoints: 0 and 1
    assert_eq!(rows.first().unwrap()[1], "2");
    assert_eq!(rows.last().unwrap()[1], "0");
}

#[test]
fn output_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["cylinders", "--samples", "20", "--m-max", "6", "--seed", "99"],
        vec!["estimate", "--alpha", "0.2", "--m-max", "8", "--n-max", "5"],
        vec!["--format", "json", "layout", "--alpha", "1/5", "--theta", "2", "--k", "4", "--rounded"],
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("out{run}"));
            let mut full = args.clone();
            full.extend(["--output", path.to_str().unwrap()]);
            let o = torec(&full);
            assert!(o.status.success(), "{args:?}: {}", stderr(&o));
            assert!(o.stdout.is_empty());
            outputs.push(fs::read(&path).unwrap());
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let args = ["estimate", "--alpha", "0.25", "--m-max", "9", "--n-max", "5", "--shift", "full2"];
    let par = torec(&args);
    let mut seq_args = vec!["--sequential"];
    seq_args.extend(args);
    let seq = torec(&seq_args);
    assert_eq!(par.stdout, seq.stdout);
}

#[test]
fn json_mirrors_csv_rows() {
    let csv_out = stdout(&torec(&["cardinality", "--delta", "2", "--n1", "3", "--k", "3"]));
    let json_out = stdout(&torec(&["--format", "json", "cardinality", "--delta", "2", "--n1", "3", "--k", "3"]));
    let records: Vec<serde_json::Value> = serde_json::from_str(&json_out).unwrap();
    let rows = csv_rows(&csv_out);
    assert_eq!(records.len(), rows.len());
    let last = records.last().unwrap();
    assert_eq!(last["kind"], "witness_count");
    assert_eq!(last["size"].as_str().unwrap(), rows.last().unwrap()[4]);
}

#[test]
fn layout_rows_name_blocks_and_free_intervals() {
    let o = torec(&["layout", "--alpha", "3/10", "--theta", "3", "--k", "2"]);
    let rows = csv_rows(&stdout(&o));
    let kinds: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(kinds, ["right(1)", "right(2)", "left(1)", "left(2)", "free(1)"]);
    assert_eq!(rows[0][1..], ["0.3".to_string(), "5.7".to_string()]);
}

#[test]
fn partition_commands_on_catalog_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let v = torec(&["partition", "validate", "--catalog", "trace-four"]);
    assert!(v.status.success(), "{}", stderr(&v));
    let m = csv_rows(&stdout(&torec(&["partition", "matrix"])));
    assert_eq!(m.len(), 5);

    // export, then read the partition back from disk
    let export = stdout(&torec(&["partition", "export"]));
    let json = value_of(&export, "partition");
    let path = dir.path().join("cat.json");
    fs::write(&path, &json).unwrap();
    let from_file = torec(&["entropy", "--file", path.to_str().unwrap()]);
    let from_catalog = torec(&["entropy"]);
    assert_eq!(from_file.stdout, from_catalog.stdout);
}

#[test]
fn verify_single_check_exits_zero() {
    let o = torec(&["verify", "--only", "2,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] == "true"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["nonsense"],
        vec!["dim"],
        vec!["dim", "--alpha", "0.1", "--grid", "0.1"],
        vec!["layout", "--alpha", "0.1"],
        vec!["--format", "xml", "entropy"],
        vec!["verify", "--only", "99"],
        vec!["dim", "--alpha", "3"],
    ] {
        let o = torec(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn every_module_error_is_reachable_and_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"matrix\": [2, 1, 1, 1]}").unwrap();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["spectrum", "1", "1", "1", "1"], "AlgebraError::NotUnimodular"),
        (vec!["spectrum", "1", "1", "-1", "0"], "AlgebraError::NotHyperbolic"),
        (vec!["layout", "--alpha", "x", "--theta", "3", "--k", "2"], "AlgebraError::ParseRational"),
        (vec!["entropy", "--catalog", "nope"], "PartitionError::UnknownCatalogEntry"),
        (vec!["entropy", "--file", bad.to_str().unwrap()], "PartitionError::Parse"),
        (vec!["recurrence", "--window", "-1 1 0 x 1", "--alpha", "0.2", "--n-max", "3"], "ShiftError::Parse"),
        (vec!["recurrence", "--window", "1 2 0 1", "--alpha", "0.2", "--n-max", "3"], "ShiftError::DomainMismatch"),
        (vec!["recurrence", "--window", "-1 1 0 0 9", "--alpha", "0.2", "--n-max", "3"], "ShiftError::InvalidSymbol"),
        (vec!["cylinder", "--window", "-1 1 0 4 4"], "CodingError::InadmissibleWindow"),
        (vec!["layout", "--alpha", "1/2", "--theta", "3", "--k", "3"], "LayoutError::RegimeViolation"),
        (vec!["cardinality", "--delta", "0", "--n1", "3", "--k", "2"], "LayoutError::InvalidParams"),
        (vec!["dim", "--grid", "0"], "DimensionError::InvalidParams"),
        (vec!["estimate", "--alpha=-1", "--m-max", "5", "--n-max", "3"], "EstimateError::InvalidSpec"),
        (vec!["estimate", "--alpha", "0.5", "--m-max", "1", "--n-max", "3"], "EstimateError::WindowTooSmall"),
    ];
    let mut messages = Vec::new();
    for (args, kind) in cases {
        let o = torec(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert!(err.starts_with(&format!("error: {kind}: ")), "{args:?}: {err}");
        messages.push(err);
    }
    let mut unique = messages.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), messages.len());
}

#[test]
fn recurrence_verdicts() {
    // a constant window returns at every shift
    let o = torec(&["recurrence", "--window", "-3 3 0 0 0 0 0 0 0", "--alpha", "0.3", "--n-max", "4", "--shift", "full2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value_of(&stdout(&o), "verdict"), "holds");
}
