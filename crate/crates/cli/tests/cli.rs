use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(file)
}

fn sachs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sachs"))
        .args(args)
        .env_remove("SACHS_PORT")
        .output()
        .expect("binary runs")
}

/// Runs a subcommand over the bundled workbook, ontology and mapping.
fn on_fig1(sub: &str, rest: &[&str]) -> Output {
    let files = ["fig1.sachs.json", "fig1.onto.json", "fig1.map.json"].map(corpus);
    let mut args = vec![sub.to_string()];
    args.extend(files.iter().map(|p| p.display().to_string()));
    args.extend(rest.iter().map(|s| s.to_string()));
    sachs(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn profit_positive_lints_1988() {
    let o = on_fig1("assess", &["--block", "profit", "--rule", "profit-positive"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let bad: Vec<&str> = text.lines().filter(|l| l.contains("BAD")).collect();
    assert_eq!(bad.len(), 1);
    assert!(bad[0].contains("1988"), "{}", bad[0]);

    let j = on_fig1("assess", &["--block", "profit", "--rule", "profit-positive", "--format", "json"]);
    assert_eq!(j.status.code(), Some(1));
    let reports = json_out(&j);
    let verdicts = reports[0]["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 5);
    let bad: Vec<&Value> = verdicts.iter().filter(|v| v["judgment"] == "Bad").map(|v| &v["arg"]).collect();
    assert_eq!(bad, [&Value::from(1988)]);
    for v in verdicts {
        for key in ["addr", "arg", "value", "judgment", "color", "text"] {
            assert!(v.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn exit_code_ignores_output_format() {
    let cases: [&[&str]; 4] = [
        &["--block", "revenues"],
        &["--block", "salaries", "--rule", "salaries-share"],
        &["--mode", "value"],
        &["--block", "salaries", "--profile", "lean-institute"],
    ];
    for case in cases {
        let text = on_fig1("assess", case);
        let mut with_json = case.to_vec();
        with_json.extend(["--format", "json"]);
        let json = on_fig1("assess", &with_json);
        assert_eq!(text.status.code(), json.status.code(), "{case:?}");
        let reports = json_out(&json);
        let any_bad = reports
            .as_array()
            .unwrap()
            .iter()
            .any(|r| !r["violations"].as_array().unwrap().is_empty());
        assert_eq!(json.status.code(), Some(i32::from(any_bad)), "{case:?}");
    }
}

#[test]
fn invariants_exit_one_on_violation() {
    let o = on_fig1("invariants", &["--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let reports = json_out(&o);
    let args: Vec<&Value> = reports[0]["violations"].as_array().unwrap().iter().map(|v| &v["arg"]).collect();
    assert_eq!(args, [&Value::from(1988), &Value::from(1989)]);
}

#[test]
fn mode_filter_and_mismatch() {
    let o = on_fig1("assess", &["--mode", "domain", "--format", "json"]);
    for r in json_out(&o).as_array().unwrap() {
        assert_eq!(r["mode"], "domain");
    }
    let o = on_fig1("assess", &["--rule", "profit-positive", "--mode", "domain"]);
    assert_eq!(o.status.code(), Some(2));
    let o = on_fig1("assess", &["--mode", "invariant"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_prints_the_evaluated_grid() {
    let o = sachs(&["inspect", corpus("fig1.sachs.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let profit = text.lines().find(|l| l.contains("Profit (Loss)")).unwrap();
    let cols: Vec<&str> = profit.split_whitespace().skip(3).collect();
    assert_eq!(cols, ["1.662", "1.741", "1.878", "0.992", "-0.449", "-0.149", "0.181"]);
    let total = text.lines().find(|l| l.contains("Total Expenses")).unwrap();
    assert!(total.ends_with("5.042"));

    let o = sachs(&["inspect", corpus("fig1.sachs.json").to_str().unwrap(), "--format", "json"]);
    let v = json_out(&o);
    assert_eq!(v["sheets"][0]["cells"]["F17"].as_f64(), Some(-0.449));
}

#[test]
fn help_matches_granularity() {
    let o = on_fig1("help", &["H9", "--granularity", "label", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!(v["entries"][0]["label"].as_str().unwrap().contains("1990"));
    assert!(v["entries"][0]["texts"].as_array().unwrap().is_empty());

    let o = on_fig1("help", &["E17", "--types", "assessment_of_value,definition"]);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(lines[1].trim_start().starts_with("Definition:"), "{lines:?}");
    assert!(lines[2].trim_start().starts_with("Assessment of Value:"), "{lines:?}");

    let o = on_fig1("help", &["A15", "--format", "json"]);
    assert!(json_out(&o)["fallback"].is_object());
}

#[test]
fn graph_formats() {
    let o = on_fig1("graph", &["--concept", "profit", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains(r#""profit" -> "revenues";"#));
    let o = on_fig1("graph", &["--concept", "H9", "--levels", "1", "--format", "json"]);
    let v = json_out(&o);
    assert_eq!(v["root"], "salaries");
    let o = on_fig1("graph", &["--concept", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn coverage_and_cooccurrence() {
    let annot = corpus("fig5.annot.json");
    let o = sachs(&["coverage", annot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for rate in ["71.8", "46.2", "30.8", "51.3", "23.1", "43.6", "15.4"] {
        assert!(text.contains(rate), "{rate} missing");
    }
    assert!(text.lines().any(|l| l.starts_with("explanations") && l.ends_with("110")));

    let o = sachs(&["coverage", annot.to_str().unwrap(), "--capability", "formula", "--format", "json"]);
    let v = json_out(&o);
    assert_eq!(v["total_explanations"], 110);
    let formula = v["capabilities"].as_array().unwrap().iter().find(|c| c["name"] == "formula").unwrap();
    assert_eq!(formula["percent"], 8);

    let o = sachs(&["cooccur", annot.to_str().unwrap(), "--top", "1", "--format", "json"]);
    let v = json_out(&o);
    assert_eq!(v["top_pairs"][0]["a"], "definition");
    assert_eq!(v["top_pairs"][0]["b"], "assessment_of_purpose");
    assert_eq!(v["top_pairs"][0]["ratio"], 1.0);
}

#[test]
fn linear_variant_for_1989_salaries() {
    let o = on_fig1("variant", &["--block", "salaries", "--order", "1", "--target", "1989", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["value"].as_f64().unwrap() - 0.793).abs() < 1e-9);
    let o = on_fig1("variant", &["--block", "salaries", "--order", "3", "--target", "1989"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(sachs(&[]).status.code(), Some(2));
    assert_eq!(sachs(&["bogus"]).status.code(), Some(2));
    assert_eq!(on_fig1("assess", &["--rule", "nope"]).status.code(), Some(2));
    assert_eq!(on_fig1("assess", &["--block", "nope"]).status.code(), Some(2));
    assert_eq!(on_fig1("assess", &["--block", "profit", "--profile", "nope"]).status.code(), Some(2));
    assert_eq!(on_fig1("help", &["not-a-cell"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.sachs.json");
    let o = sachs(&["inspect", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());

    let broken = dir.path().join("broken.sachs.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(sachs(&["inspect", broken.to_str().unwrap()]).status.code(), Some(3));
    let o = sachs(&["coverage", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn csv_workbooks_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "Year,1984,1985\nA,1,2\nB,3,4\nSum,=B2+B3,=C2+C3\n").unwrap();
    let o = sachs(&["inspect", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    assert_eq!(v["sheets"][0]["cells"]["B4"], 4);
    assert_eq!(v["sheets"][0]["cells"]["C4"], 6);
}

#[test]
fn serve_rejects_an_unreadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json");
    let m = missing.to_str().unwrap();
    let o = sachs(&["serve", m, m, m, "--port", "0"]);
    assert_eq!(o.status.code(), Some(3));
}
