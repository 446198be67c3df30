use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_support-size")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `(table name, columns, rows)` with every cell kept as text.
type ParsedTable = (String, Vec<String>, Vec<Vec<String>>);

fn parse_csv(text: &str) -> Vec<ParsedTable> {
    let mut tables = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        if let Some(name) = line.strip_prefix("# table=") {
            let columns = lines.next().unwrap().split(',').map(str::to_string).collect();
            let mut rows = Vec::new();
            while let Some(row) = lines.next_if(|l| !l.is_empty()) {
                rows.push(split_csv(row));
            }
            tables.push((name.to_string(), columns, rows));
        }
    }
    tables
}

fn split_csv(row: &str) -> Vec<String> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = row.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => cells.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    cells.push(cur);
    cells
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn rows_of<'a>(tables: &'a [ParsedTable], name: &str) -> &'a [Vec<String>] {
    &tables.iter().find(|t| t.0 == name).unwrap_or_else(|| panic!("no table {name}")).2
}

#[test]
fn golden_accept() {
    let o = run(&["test", "--n", "100", "--eps", "0.25", "--mode", "empirical", "--dist", "uniform:100", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/test_uniform100_seed1.csv")).unwrap();
    assert_eq!(stdout(&o), golden);
    assert!(golden.contains("Accept,"));
}

#[test]
fn naive_path_for_tiny_instance() {
    let o = run(&["test", "--n", "1", "--eps", "0.5", "--dist", "uniform:1"]);
    assert_eq!(o.status.code(), Some(0));
    let tables = parse_csv(&stdout(&o));
    let row = &rows_of(&tables, "verdict")[0];
    assert_eq!(row[0], "Accept");
    assert_eq!(row[4], "naive");
}

#[test]
fn malformed_distribution_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tsv");
    std::fs::write(&path, "1\t0.5\n2\n").unwrap();
    let arg = format!("@{}", path.display());
    let o = run(&["test", "--n", "10", "--eps", "0.25", "--dist", &arg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn distribution_file_matches_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.tsv");
    let body: String = (0..100).map(|i| format!("{i}\t1/100\n")).collect();
    std::fs::write(&path, body).unwrap();
    let arg = format!("@{}", path.display());
    let from_file = run(&["test", "--n", "100", "--eps", "0.25", "--dist", &arg, "--seed", "1"]);
    let from_family = run(&["test", "--n", "100", "--eps", "0.25", "--dist", "uniform:100", "--seed", "1"]);
    let verdict = |o: &Output| rows_of(&parse_csv(&stdout(o)), "verdict")[0][..5].to_vec();
    assert_eq!(verdict(&from_file), verdict(&from_family));
}

#[test]
fn exit_verdict_reports_reject() {
    let o = run(&["test", "--n", "100", "--eps", "0.25", "--dist", "far_uniform:100:1/4", "--seed", "2", "--exit-verdict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["test", "--n", "100", "--eps", "0.25", "--dist", "uniform:100", "--seed", "2", "--exit-verdict"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn recorded_samples_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.txt");
    std::fs::write(&samples, "1 2 3\n3 4\n").unwrap();
    let o = run(&["test", "--n", "100", "--eps", "0.25", "--samples", samples.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows_of(&parse_csv(&stdout(&o)), "verdict")[0][0], "Accept");

    let labeled = dir.path().join("l.tsv");
    std::fs::write(&labeled, "1\t0\n2\t0\n").unwrap();
    let o = run(&["test", "--n", "100", "--eps", "0.25", "--labeled", labeled.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows_of(&parse_csv(&stdout(&o)), "verdict")[0][4], "no_ones");
}

#[test]
fn paper_mode_outside_assumption_is_a_parameter_failure() {
    let o = run(&["params", "--n", "10^90", "--eps", "0.445", "--mode", "paper-iv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn audit_flags_constraint_one() {
    let o = run(&["params", "--n", "100", "--eps", "0.25", "--audit", "--ell", "1/100", "--r", "1/50", "--d", "40", "--m", "5000"]);
    assert_eq!(o.status.code(), Some(0));
    let tables = parse_csv(&stdout(&o));
    let row = rows_of(&tables, "constraints").iter().find(|r| r[0] == "I").unwrap();
    assert_eq!(row[1], "false");
}

#[test]
fn paper_variants_share_degree() {
    let get = |mode: &str| {
        let o = run(&["params", "--n", "10^130", "--eps", "0.3", "--mode", mode, "--format", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let cols: Vec<String> = v["tables"]["params"]["columns"].as_array().unwrap().iter().map(cell_text).collect();
        let row = v["tables"]["params"]["rows"][0].as_array().unwrap().clone();
        let constraints = v["tables"]["constraints"]["rows"].as_array().unwrap().clone();
        assert!(constraints.iter().all(|r| r[1] == Value::Bool(true)), "{mode}: {constraints:?}");
        let at = |c: &str| cell_text(&row[cols.iter().position(|x| x == c).unwrap()]);
        (at("d"), at("m"))
    };
    let (d_iv, m_iv) = get("paper-iv");
    let (d_ivb, m_ivb) = get("paper-ivb");
    assert_eq!(d_iv, d_ivb);
    let ratio = m_iv.parse::<f64>().unwrap() / m_ivb.parse::<f64>().unwrap();
    assert!((ratio - (1.0f64 / 0.3).log2()).abs() < 1e-6);
}

#[test]
fn empirical_params_list_semantic_checks() {
    let o = run(&["params", "--n", "100", "--eps", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let tables = parse_csv(&stdout(&o));
    let checks = rows_of(&tables, "semantic_checks");
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|r| r[1] == "true"));
}

#[test]
fn verify_gate_and_fault_injection() {
    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "--inject-fault", "--grid", "200"]);
    assert_eq!(o.status.code(), Some(5));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL") && err.contains(" at "));
}

#[test]
fn plot_data_figures() {
    let o = run(&["plot-data", "--figure", "cheb"]);
    let tables = parse_csv(&stdout(&o));
    let rows = rows_of(&tables, "cheb");
    assert_eq!(rows.len(), 1001);
    let t: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let max = t.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert_eq!(max, t[0].abs().max(t[1000].abs()));

    let o = run(&["plot-data", "--figure", "fvalues"]);
    let tables = parse_csv(&stdout(&o));
    assert_eq!(rows_of(&tables, "fvalues")[0][..2], ["0".to_string(), "0.0".to_string()]);

    let o = run(&["plot-data", "--figure", "phi", "--d", "5"]);
    let tables = parse_csv(&stdout(&o));
    let phi = rows_of(&tables, "phi");
    assert!(phi.iter().any(|r| r[1].parse::<f64>().unwrap() < r[2].parse::<f64>().unwrap()));

    assert_eq!(run(&["plot-data", "--figure", "q", "--grid", "1"]).status.code(), Some(2));
}

#[test]
fn csv_and_json_carry_the_same_values() {
    for args in [
        vec!["test", "--n", "100", "--eps", "0.25", "--dist", "zipf:150:1", "--seed", "4"],
        vec!["params", "--n", "200", "--eps", "0.2"],
        vec!["plot-data", "--figure", "qstar", "--grid", "51"],
        vec!["lower-bound", "--n", "100", "--eps", "0.25", "--dist", "uniform:30", "--seed", "3"],
    ] {
        let csv = parse_csv(&stdout(&run(&args)));
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let doc: Value = serde_json::from_str(&stdout(&run(&json_args))).unwrap();
        assert_eq!(doc["schema_version"], 1);
        for (name, columns, rows) in &csv {
            let t = &doc["tables"][name];
            let jcols: Vec<String> = t["columns"].as_array().unwrap().iter().map(cell_text).collect();
            assert_eq!(&jcols, columns);
            let jrows: Vec<Vec<String>> =
                t["rows"].as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(cell_text).collect()).collect();
            assert_eq!(&jrows, rows, "{args:?} table {name}");
        }
    }
}

#[test]
fn lower_bound_point_mass() {
    let o = run(&["lower-bound", "--n", "100", "--eps", "0.25", "--dist", "point", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let tables = parse_csv(&stdout(&o));
    assert_eq!(rows_of(&tables, "estimate")[0][0], "1.0");
    let deltas: Vec<f64> = rows_of(&tables, "rounds").iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(&deltas[..3], &[0.125, 0.0625, 0.03125]);
}

#[test]
fn simulate_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["simulate", "--n", "100", "--eps", "0.25", "--dist", "uniform:100", "--trials", "20", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["command"], "simulate");
}

#[test]
fn input_errors() {
    assert_eq!(run(&["test", "--n", "100", "--eps", "1.5", "--dist", "uniform:3"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--n", "100", "--eps", "0.25", "--dist", "nope:3"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--n", "100", "--eps", "0.25", "--dist", "uniform:3", "--trials", "0"]).status.code(), Some(2));
}
