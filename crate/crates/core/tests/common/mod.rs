#![allow(dead_code)]

pub mod strategies;

use rust_decimal::Decimal;
use sachs_core::interpretation::Mapping;
use sachs_core::workbook::{column_to_letters, parse_native};
use sachs_core::{corpus, CellAddress, Engine, Granularity, Ontology, TraceNode};

/// One-block engine: legend in row 1, values in row 2, concept `x` carrying `rules`
/// (a JSON array of rule objects).
pub fn line_engine(args: &[i64], values: &[Decimal], rules: &str) -> Engine {
    assert_eq!(args.len(), values.len());
    let mut cells = Vec::new();
    for (i, (a, v)) in args.iter().zip(values).enumerate() {
        let col = column_to_letters(i as u32 + 2);
        cells.push(format!(r#"{{"addr": "{col}1", "number": "{a}"}}"#));
        cells.push(format!(r#"{{"addr": "{col}2", "number": "{v}"}}"#));
    }
    cells.push(r#"{"addr": "A2", "text": "X"}"#.to_string());
    let wb = format!(r#"{{"version": 1, "sheets": [{{"name": "S", "cells": [{}]}}]}}"#, cells.join(","));
    let onto = format!(
        r#"{{"version": 1, "profiles": {{"default": {{"limit": 3}}}},
            "concepts": [{{"id": "x", "name": "X", "explanations": {{"definition": "X at {{arg}} is {{value}}."}},
            "rules": {rules}}}]}}"#
    );
    let last = column_to_letters(args.len() as u32 + 1);
    let map = format!(
        r#"{{"version": 1, "blocks": [{{"id": "x", "concept": "x", "region": "B2:{last}2", "legend": "B1:{last}1",
            "axis": "row", "label_template": "X in {{arg}}"}}]}}"#
    );
    Engine::new(
        parse_native(&wb).unwrap(),
        Ontology::from_json(&onto).unwrap(),
        Mapping::from_json(&map).unwrap(),
    )
    .unwrap()
}

pub fn rule(id: &str, mode: &str, predicate: &str) -> String {
    format!(
        r#"{{"id": "{id}", "mode": "{mode}", "predicate": "{predicate}",
            "good_text": "fine at {{arg}}", "bad_text": "{{value}} at {{arg}} fails"}}"#
    )
}

/// Checks the DOT subset the exporter emits: one `digraph` with node, attribute
/// and edge statements, quoted or bare ids, and `[k=v, ...]` lists. Every edge
/// endpoint must be declared as a node first.
pub fn check_dot(src: &str) -> Result<(), String> {
    #[derive(Debug, PartialEq, Clone)]
    enum Tok {
        Id(String),
        Sym(&'static str),
    }
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        let next = *chars.get(i + 1).ok_or("dangling escape")?;
                        s.push(next);
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            toks.push(Tok::Id(s));
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            toks.push(Tok::Id(chars[start..i].iter().collect()));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push(Tok::Sym("->"));
            i += 2;
        } else {
            let sym = match c {
                '{' => "{",
                '}' => "}",
                '[' => "[",
                ']' => "]",
                '=' => "=",
                ',' => ",",
                ';' => ";",
                _ => return Err(format!("unexpected character {c:?}")),
            };
            toks.push(Tok::Sym(sym));
            i += 1;
        }
    }
    let mut p = 0;
    let id = |p: &mut usize| -> Result<String, String> {
        match toks.get(*p) {
            Some(Tok::Id(s)) => {
                *p += 1;
                Ok(s.clone())
            }
            other => Err(format!("expected id, got {other:?}")),
        }
    };
    let sym = |p: &mut usize, s: &str| -> Result<(), String> {
        match toks.get(*p) {
            Some(Tok::Sym(t)) if *t == s => {
                *p += 1;
                Ok(())
            }
            other => Err(format!("expected {s}, got {other:?}")),
        }
    };
    let attrs = |p: &mut usize| -> Result<(), String> {
        sym(p, "[")?;
        while toks.get(*p) != Some(&Tok::Sym("]")) {
            id(p)?;
            sym(p, "=")?;
            id(p)?;
            if matches!(toks.get(*p), Some(Tok::Sym("," | ";"))) {
                *p += 1;
            }
        }
        sym(p, "]")
    };
    if id(&mut p)? != "digraph" {
        return Err("not a digraph".into());
    }
    if matches!(toks.get(p), Some(Tok::Id(_))) {
        p += 1;
    }
    sym(&mut p, "{")?;
    let mut declared = std::collections::HashSet::new();
    while toks.get(p) != Some(&Tok::Sym("}")) {
        let first = id(&mut p)?;
        if matches!(first.as_str(), "node" | "edge" | "graph") && toks.get(p) == Some(&Tok::Sym("[")) {
            attrs(&mut p)?;
        } else if toks.get(p) == Some(&Tok::Sym("->")) {
            let mut ends = vec![first];
            while toks.get(p) == Some(&Tok::Sym("->")) {
                p += 1;
                ends.push(id(&mut p)?);
            }
            if let Some(missing) = ends.iter().find(|e| !declared.contains(*e)) {
                return Err(format!("edge endpoint {missing} was never declared"));
            }
            if toks.get(p) == Some(&Tok::Sym("[")) {
                attrs(&mut p)?;
            }
        } else {
            declared.insert(first);
            if toks.get(p) == Some(&Tok::Sym("[")) {
                attrs(&mut p)?;
            }
        }
        if toks.get(p) == Some(&Tok::Sym(";")) {
            p += 1;
        }
    }
    sym(&mut p, "}")?;
    if p != toks.len() {
        return Err("trailing input".into());
    }
    Ok(())
}

fn check<T: PartialEq + std::fmt::Debug>(a: T, b: T, what: &str) -> Result<(), String> {
    if a == b {
        Ok(())
    } else {
        Err(format!("{what}: {a:?} != {b:?}"))
    }
}

/// Moves the bundled corpus down by `rows` and compares intended functions,
/// every rule report under both profiles, help at every granularity, the
/// invariant and the trace of the 1988 profit cell.
pub fn shift_invariance(rows: i64) -> Result<(), String> {
    let base = corpus::fig1().map_err(|e| e.to_string())?;
    let moved = base.shifted_rows(rows).ok_or("shift out of range")?.map_err(|e| e.to_string())?;
    let shift = |a: CellAddress, by: i64| a.offset(0, by).expect("in range");
    for block in base.interpretation().blocks() {
        let f0 = base.interpretation().intended_function(&block.id, base.evaluation()).map_err(|e| e.to_string())?;
        let f1 = moved.interpretation().intended_function(&block.id, moved.evaluation()).map_err(|e| e.to_string())?;
        check(f0.pairs.len(), f1.pairs.len(), "pair count")?;
        for (p, q) in f0.pairs.iter().zip(&f1.pairs) {
            check(shift(p.addr, rows), q.addr, "pair address")?;
            check((&p.arg, p.value), (&q.arg, q.value), &block.id)?;
        }
        for r in base.ontology().rules().filter(|r| r.concept_id == block.concept_id) {
            for profile in [None, Some("lean-institute")] {
                let a = base.assess(&block.id, &r.id, profile).map_err(|e| e.to_string())?;
                let mut b = moved.assess(&block.id, &r.id, profile).map_err(|e| e.to_string())?;
                for v in b.verdicts.iter_mut().chain(b.violations.iter_mut()) {
                    v.addr = shift(v.addr, -rows);
                }
                check(a, b, &r.id)?;
            }
        }
        for addr in block.region.cells() {
            for g in [Granularity::Label, Granularity::Comment, Granularity::Explanation] {
                let h0 = base.help(addr, &[], g);
                let h1 = moved.help(shift(addr, rows), &[], g);
                check(h0.entries, h1.entries, "help")?;
            }
        }
    }
    let inv0 = base.check_invariant("revenues-exceed-expenses").map_err(|e| e.to_string())?;
    let inv1 = moved.check_invariant("revenues-exceed-expenses").map_err(|e| e.to_string())?;
    check(inv0.judgments(), inv1.judgments(), "invariant")?;
    let f17 = CellAddress::new(6, 17).unwrap();
    let t0 = base.trace(f17, 3).map_err(|e| e.to_string())?;
    let t1 = moved.trace(shift(f17, rows), 3).map_err(|e| e.to_string())?;
    let j = |t: &TraceNode| t.walk().iter().map(|n| (n.concept_id.clone(), n.judgment)).collect::<Vec<_>>();
    check(j(&t0), j(&t1), "trace")
}
