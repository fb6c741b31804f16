//! Acceptance gate: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rust_decimal::Decimal;
use sachs_core::engine::has_placeholder;
use sachs_core::helpgen::{capability_presets, cooccurrence, coverage, CapabilityProfile};
use sachs_core::ontology::{variant_value, VariantFn};
use sachs_core::workbook::{evaluate, parse_formula, parse_native};
use sachs_core::{corpus, Arg, CellAddress, ExplanationType, Granularity, Judgment, Value};

use common::strategies::{annotation, formula, sample_set};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn a(s: &str) -> CellAddress {
    s.parse().unwrap()
}

fn args(report: &sachs_core::AssessmentReport, j: Judgment) -> Vec<String> {
    report.verdicts.iter().filter(|v| v.judgment == j).map(|v| v.arg.to_string()).collect()
}

fn golden_workbook() -> Outcome {
    const EXPECTED: [(&str, &str); 14] = [
        ("B15", "2.203"),
        ("C15", "3.251"),
        ("D15", "3.925"),
        ("E15", "4.449"),
        ("F15", "4.573"),
        ("G15", "4.766"),
        ("H15", "5.042"),
        ("B17", "1.662"),
        ("C17", "1.741"),
        ("D17", "1.878"),
        ("E17", "0.992"),
        ("F17", "-0.449"),
        ("G17", "-0.149"),
        ("H17", "0.181"),
    ];
    let start = Instant::now();
    let wb = parse_native(corpus::FIG1_WORKBOOK).map_err(|e| e.to_string())?;
    let ev = evaluate(&wb).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for (cell, want) in EXPECTED {
        let want = Value::Number(want.parse::<Decimal>().unwrap());
        let got = ev.get(a(cell));
        ensure(*got == want, || format!("{cell} = {got}, expected {want}"))?;
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn value_assessment() -> Outcome {
    let e = corpus::fig1().map_err(|e| e.to_string())?;
    let r = e.assess_values("profit", "profit-positive").map_err(|e| e.to_string())?;
    let j = r.judgments();
    use Judgment::*;
    ensure(j == [Good, Good, Good, Good, Bad], || format!("verdicts {j:?}"))?;
    ensure(args(&r, Bad) == ["1988"], || format!("bad at {:?}", args(&r, Bad)))
}

fn domain_assessment() -> Outcome {
    let e = corpus::fig1().map_err(|e| e.to_string())?;
    let r = e.assess_domain("profit", "profit-rising").map_err(|e| e.to_string())?;
    use Judgment::*;
    let j = r.judgments();
    ensure(j == [Good, Good, Good, Bad, Bad], || format!("verdicts {j:?}"))
}

fn trace() -> Outcome {
    let e = corpus::fig1().map_err(|e| e.to_string())?;
    let t = e.trace(a("F17"), 2).map_err(|e| e.to_string())?;
    let revenues = t.find("revenues").ok_or("revenues missing from trace")?;
    ensure(revenues.arg == Arg::from(1988), || format!("revenues traced at {}", revenues.arg))?;
    ensure(revenues.judgment == Judgment::Bad, || format!("revenues@1988 is {:?}", revenues.judgment))?;
    let mut compared = 0;
    for node in t.walk() {
        for rv in &node.verdicts {
            let Some(v) = &rv.verdict else { continue };
            let direct = e.assess(&v.block_id, &rv.rule_id, None).map_err(|e| e.to_string())?;
            ensure(direct.at(&node.arg) == Some(v), || format!("{} differs from direct assessment", rv.rule_id))?;
            compared += 1;
        }
    }
    ensure(compared >= 3, || format!("only {compared} verdicts compared"))
}

fn invariant() -> Outcome {
    let e = corpus::fig1().map_err(|e| e.to_string())?;
    let r = e.check_invariant("revenues-exceed-expenses").map_err(|e| e.to_string())?;
    ensure(r.verdicts.len() == 7, || format!("{} arguments checked", r.verdicts.len()))?;
    let bad = args(&r, Judgment::Bad);
    ensure(bad == ["1988", "1989"], || format!("violations at {bad:?}"))
}

fn coverage_analytics() -> Outcome {
    let ann = corpus::fig5_annotation().map_err(|e| e.to_string())?;
    let mut profiles = capability_presets();
    profiles.push(CapabilityProfile::new("formula-only", &[ExplanationType::Formula]));
    let r = coverage(&ann, &profiles).map_err(|e| e.to_string())?;
    ensure(r.total_items == 39, || format!("{} items", r.total_items))?;
    ensure(r.total_explanations == 110, || format!("{} explanations", r.total_explanations))?;
    let expected = ["71.8", "46.2", "30.8", "51.3", "23.1", "43.6", "15.4"];
    for (t, want) in r.types.iter().zip(expected) {
        ensure(t.rate == want.parse::<Decimal>().unwrap(), || format!("{} rate {}, expected {want}", t.kind, t.rate))?;
    }
    for name in ["formula-only", "excel"] {
        let c = r.capability(name).ok_or("missing profile")?;
        ensure(c.percent == Decimal::from(8), || format!("{name} covers {}%", c.percent))?;
    }
    let top = cooccurrence(&ann).map_err(|e| e.to_string())?.top_pairs(1);
    ensure(
        top[0].a == ExplanationType::Definition && top[0].b == ExplanationType::AssessmentOfPurpose && top[0].ratio == 1.0,
        || format!("top pair {:?}", top[0]),
    )
}

fn help_generation() -> Outcome {
    let e = corpus::fig1().map_err(|e| e.to_string())?;
    let h = e.help(a("H9"), &[], Granularity::Label);
    let label = h.entries.first().map(|x| x.label.clone()).ok_or("no help entry for H9")?;
    ensure(label.contains("1990"), || format!("label `{label}`"))?;
    let (cols, rows) = e.workbook().primary().extent().ok_or("empty sheet")?;
    let mut checked = 0;
    for row in 1..=rows + 1 {
        for col in 1..=cols + 1 {
            let addr = CellAddress::new(col, row).unwrap();
            for g in [Granularity::Label, Granularity::Comment, Granularity::Explanation] {
                for t in e.help(addr, &[], g).all_texts() {
                    ensure(!has_placeholder(t), || format!("{addr}: `{t}`"))?;
                    checked += 1;
                }
            }
        }
    }
    for t in e.all_texts() {
        ensure(!has_placeholder(&t), || format!("`{t}`"))?;
        checked += 1;
    }
    ensure(checked > 500, || format!("only {checked} texts"))
}

fn run<S: proptest::strategy::Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn property_suites() -> Outcome {
    run(1000, formula(), |expr| {
        let src = expr.render();
        let back = parse_formula(&src).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        if back != expr {
            return Err(TestCaseError::fail(format!("{src} parsed to a different tree")));
        }
        Ok(())
    })
    .map_err(|e| format!("formula round-trip: {e}"))?;
    run(100, sample_set(), |(order, samples)| {
        let f = VariantFn::LagrangeExtrapolation(order);
        for &(x, y) in &samples {
            let got = variant_value(&f, &samples, x).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if (got - y).abs() > 1e-9 {
                return Err(TestCaseError::fail(format!("node {x}: {got} vs {y}")));
            }
        }
        Ok(())
    })
    .map_err(|e| format!("lagrange nodes: {e}"))?;
    run(256, annotation(), |ann| {
        let m = cooccurrence(&ann).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for i in ExplanationType::ALL {
            for j in ExplanationType::ALL {
                if m.get(i, j) != m.get(j, i) || m.get(i, j) > m.get(i, i).min(m.get(j, j)) {
                    return Err(TestCaseError::fail(format!("matrix breaks at {i}/{j}")));
                }
            }
        }
        Ok(())
    })
    .map_err(|e| format!("co-occurrence: {e}"))?;
    for rows in [1, 2, 7] {
        common::shift_invariance(rows).map_err(|e| format!("shift by {rows}: {e}"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden workbook: 14 derived values exact, under 1 s", golden_workbook),
        ("value assessment: profit > 0 is Bad only at 1988", value_assessment),
        ("domain assessment: profit rising is G G G B B", domain_assessment),
        ("trace: revenues@1988 Bad, trace equals direct assessment", trace),
        ("invariant: revenues > total expenses violated at 1988, 1989", invariant),
        ("coverage: seven rates, 110 explanations, formula-only 8%", coverage_analytics),
        ("help: H9 label mentions 1990, no unfilled placeholder", help_generation),
        ("property suites: round-trip, Lagrange, co-occurrence, shift", property_suites),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
