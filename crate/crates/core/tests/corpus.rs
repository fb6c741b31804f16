use sachs_core::corpus;
use sachs_core::engine::has_placeholder;
use sachs_core::{Arg, CellAddress, Color, ExplanationType, Granularity, Judgment, Value};

fn a(s: &str) -> CellAddress {
    s.parse().unwrap()
}

fn num(s: &str) -> Value {
    Value::Number(s.parse().unwrap())
}

// Frozen from an independent exact-fraction recomputation of rows 15 and 17.
const TOTALS: [&str; 7] = ["2.203", "3.251", "3.925", "4.449", "4.573", "4.766", "5.042"];
const PROFIT: [&str; 7] = ["1.662", "1.741", "1.878", "0.992", "-0.449", "-0.149", "0.181"];

#[test]
fn derived_rows_match() {
    let e = corpus::fig1().unwrap();
    for (i, col) in ["B", "C", "D", "E", "F", "G", "H"].iter().enumerate() {
        assert_eq!(e.evaluation().get(a(&format!("{col}15"))), &num(TOTALS[i]), "{col}15");
        assert_eq!(e.evaluation().get(a(&format!("{col}17"))), &num(PROFIT[i]), "{col}17");
    }
}

#[test]
fn ontology_shape() {
    let e = corpus::fig1().unwrap();
    assert_eq!(e.ontology().concepts().len(), 13);
    assert_eq!(e.interpretation().blocks().len(), 8);
}

#[test]
fn profit_positive_flags_only_1988() {
    let e = corpus::fig1().unwrap();
    let r = e.assess_values("profit", "profit-positive").unwrap();
    let bad: Vec<_> = r.violations.iter().map(|v| v.arg.to_string()).collect();
    assert_eq!(bad, ["1988"]);
    assert_eq!(r.verdicts.len(), 5);
    assert_eq!(r.at(&Arg::from(1988)).unwrap().color, Color::Red);
    assert!(r.at(&Arg::from(1988)).unwrap().text.contains("-0.449"));
}

#[test]
fn profit_rising_domain() {
    use Judgment::*;
    let e = corpus::fig1().unwrap();
    let r = e.assess_domain("profit", "profit-rising").unwrap();
    assert_eq!(r.judgments(), [Good, Good, Good, Bad, Bad]);
}

#[test]
fn mode_mismatch_is_a_type_error() {
    let e = corpus::fig1().unwrap();
    assert!(matches!(
        e.assess_values("profit", "profit-rising"),
        Err(sachs_core::AssessError::RuleType(_))
    ));
    assert!(matches!(
        e.assess_domain("profit", "profit-positive"),
        Err(sachs_core::AssessError::RuleType(_))
    ));
}

#[test]
fn rule_must_match_block_concept() {
    let e = corpus::fig1().unwrap();
    assert!(matches!(
        e.assess_values("revenues", "profit-positive"),
        Err(sachs_core::AssessError::RuleNotForBlock { .. })
    ));
}

#[test]
fn invariant_violations() {
    let e = corpus::fig1().unwrap();
    let r = e.check_invariant("revenues-exceed-expenses").unwrap();
    assert_eq!(r.verdicts.len(), 7);
    let bad: Vec<_> = r.violations.iter().map(|v| v.arg.to_string()).collect();
    assert_eq!(bad, ["1988", "1989"]);
    let t = &r.violations[0].text;
    assert!(t.contains("4.124") && t.contains("4.573"), "{t}");
}

#[test]
fn trace_of_profit_1988() {
    let e = corpus::fig1().unwrap();
    let t = e.trace(a("F17"), 2).unwrap();
    assert_eq!(t.concept_id, "profit");
    assert_eq!(t.judgment, Judgment::Bad);
    assert_eq!(t.find("revenues").unwrap().judgment, Judgment::Bad);
    assert_eq!(t.find("total-expenses").unwrap().judgment, Judgment::Bad);
    // uninterpreted dependencies stay gray
    let t3 = e.trace(a("F17"), 3).unwrap();
    assert_eq!(t3.find("per-expense-category").unwrap().judgment, Judgment::Unknown);
}

#[test]
fn trace_agrees_with_direct_assessment() {
    let e = corpus::fig1().unwrap();
    let t = e.trace(a("F17"), 3).unwrap();
    for node in t.walk() {
        for rv in &node.verdicts {
            let Some(v) = &rv.verdict else { continue };
            let direct = e.assess(&v.block_id, &rv.rule_id, None).unwrap();
            assert_eq!(direct.at(&node.arg), Some(v), "{} {}", node.concept_id, rv.rule_id);
        }
    }
}

#[test]
fn profile_override_changes_salary_verdicts() {
    let e = corpus::fig1().unwrap();
    let default = e.assess("salaries", "salaries-share", None).unwrap();
    let lean = e.assess("salaries", "salaries-share", Some("lean-institute")).unwrap();
    assert!(default.violations.is_empty());
    assert!(lean.violations.len() > default.violations.len());
}

#[test]
fn h9_label_mentions_1990() {
    let e = corpus::fig1().unwrap();
    let h = e.help(a("H9"), &[], Granularity::Label);
    assert_eq!(h.entries.len(), 1);
    assert_eq!(h.entries[0].concept_id, "salaries");
    assert!(h.entries[0].label.contains("1990"), "{}", h.entries[0].label);
    assert!(h.entries[0].texts.is_empty());
}

#[test]
fn comment_is_label_plus_definition() {
    let e = corpus::fig1().unwrap();
    let h = e.help(a("H9"), &[], Granularity::Comment);
    let texts = &h.entries[0].texts;
    assert_eq!(texts.len(), 1);
    assert_eq!(texts[0].kind, ExplanationType::Definition);
    assert!(texts[0].text.contains("0.919"));
}

#[test]
fn explanation_orders_by_weight() {
    let e = corpus::fig1().unwrap();
    let h = e.help(
        a("E17"),
        &[ExplanationType::AssessmentOfValue, ExplanationType::Definition],
        Granularity::Explanation,
    );
    let kinds: Vec<_> = h.entries[0].texts.iter().map(|t| t.kind).collect();
    assert_eq!(kinds, [ExplanationType::Definition, ExplanationType::AssessmentOfValue]);
    let def = &h.entries[0].texts[0].text;
    assert!(def.starts_with("Definition: "), "{def}");
    // dependent concrete values are listed
    assert!(def.contains("5.441") && def.contains("4.449"), "{def}");
}

#[test]
fn missing_types_are_not_fabricated() {
    let e = corpus::fig1().unwrap();
    let h = e.help(a("E17"), &[ExplanationType::History], Granularity::Explanation);
    assert!(h.entries[0].texts.is_empty());
}

#[test]
fn uninterpreted_cells_get_grid_labels() {
    let e = corpus::fig1().unwrap();
    let h = e.help(a("B4"), &[], Granularity::Explanation);
    assert!(h.entries.is_empty());
    let f = h.fallback.unwrap();
    assert_eq!(f.row_header, None);
    assert_eq!(f.column_header.as_deref(), Some("Actual"));
    let h = e.help(a("A15"), &[], Granularity::Label);
    assert_eq!(h.fallback.unwrap().column_header.as_deref(), Some("Other"));
}

#[test]
fn no_placeholder_survives() {
    let e = corpus::fig1().unwrap();
    let texts = e.all_texts();
    assert!(texts.len() > 100);
    for t in texts {
        assert!(!has_placeholder(&t), "{t}");
    }
}

#[test]
fn salary_prognosis_variants() {
    let e = corpus::fig1().unwrap();
    let y1989 = Arg::from(1989);
    let lin = e.variant("salaries", "prognosis", "linear", &y1989).unwrap();
    assert!((lin.value - 0.793).abs() < 1e-9);
    assert_eq!(lin.actual, Some(num("0.805")));
    let quad = e.variant("salaries", "prognosis", "quadratic", &y1989).unwrap();
    assert!((quad.value - 0.770).abs() < 1e-9);
    let growth = e.variant("salaries", "prognosis", "constant-growth", &y1989).unwrap();
    assert!((growth.value - 0.793).abs() < 1e-9);
    assert!(e.variant("salaries", "prognosis", "cubic", &y1989).is_err());
}

#[test]
fn graph_levels() {
    let e = corpus::fig1().unwrap();
    let g = e.graph("profit", 2).unwrap();
    let ids: Vec<_> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    assert_eq!(
        ids,
        ["profit", "revenues", "total-expenses", "salaries", "utilities", "materials", "administration", "other-expenses"]
    );
    assert!(g.nodes.iter().all(|n| n.depth <= 2));
    let leaf = e.graph("year", 1).unwrap();
    assert_eq!(leaf.nodes.len(), 1);
    assert!(leaf.edges.is_empty());
}

#[test]
fn graph_for_h9_roots_at_salaries() {
    let e = corpus::fig1().unwrap();
    let g = e.graph_for_cell(a("H9"), 2).unwrap();
    assert_eq!(g.root, "salaries");
    assert_eq!(g.arg, Some(Arg::from(1990)));
}

#[test]
fn expand_adds_categories_once() {
    let e = corpus::fig1().unwrap();
    let g = e.graph("total-expenses", 0).unwrap();
    let g1 = e.expand(&g, "total-expenses").unwrap();
    assert_eq!(g1.nodes.len(), 6);
    assert_eq!(e.expand(&g1, "total-expenses").unwrap(), g1);
    let leaf = e.expand(&g1, "salaries").unwrap();
    assert!(leaf.nodes.len() >= g1.nodes.len());
    assert!(e.expand(&g1, "profit").is_err());
}

#[test]
fn trace_graph_colors() {
    let e = corpus::fig1().unwrap();
    let t = e.trace(a("F17"), 2).unwrap();
    let g = e.trace_graph(&t).unwrap();
    assert_eq!(g.node("profit").unwrap().color, Some(Color::Red));
    assert_eq!(g.node("revenues").unwrap().color, Some(Color::Red));
    let dot = g.to_dot();
    assert!(dot.contains("\"profit\" [label=\"Profit\", fillcolor=red]"), "{dot}");
    assert!(dot.contains("\"revenues\" [label=\"Revenues\", fillcolor=red]"), "{dot}");
}

#[test]
fn granularity_changes_node_text() {
    let e = corpus::fig1().unwrap();
    let g = e.graph_for_cell(a("F17"), 1).unwrap();
    let g = e.set_granularity(&g, "profit", Granularity::Comment).unwrap();
    let n = g.node("profit").unwrap();
    assert_eq!(n.granularity, Granularity::Comment);
    assert!(n.text.contains("-0.449"), "{}", n.text);
}

#[test]
fn resolve_reports_hits() {
    let e = corpus::fig1().unwrap();
    let r = e.resolve(a("F17"));
    assert_eq!(r.hits.len(), 1);
    assert_eq!(r.hits[0].concept, "profit");
    assert_eq!(r.hits[0].arg, Arg::from(1988));
    assert!(e.resolve(a("A1")).fallback.is_some());
}

#[test]
fn unknown_profile_is_rejected() {
    let e = corpus::fig1().unwrap();
    assert!(matches!(
        e.assess("salaries", "salaries-share", Some("nobody")),
        Err(sachs_core::AssessError::UnknownProfile(_))
    ));
}
