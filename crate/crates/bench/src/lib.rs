//! Synthetic workloads for the benches: the profit-and-loss layout of the
//! bundled corpus, stretched to any number of year columns.

use sachs_core::interpretation::Mapping;
use sachs_core::workbook::{column_to_letters, parse_native};
use sachs_core::{corpus, Engine, Ontology, Workbook};

const ROWS: [(u32, &str); 6] = [
    (6, "Revenues"),
    (9, "Salaries"),
    (10, "Utilities"),
    (11, "Materials"),
    (12, "Administration"),
    (13, "Other"),
];

const BLOCKS: [(&str, u32); 8] = [
    ("revenues", 6),
    ("salaries", 9),
    ("utilities", 10),
    ("materials", 11),
    ("administration", 12),
    ("other-expenses", 13),
    ("total-expenses", 15),
    ("profit", 17),
];

/// Native workbook JSON with `years` columns starting at 1984. Inputs follow
/// smooth deterministic curves so every rule sees both verdicts somewhere.
pub fn workbook_json(years: u32) -> String {
    let mut cells = vec![r#"{"addr": "A1", "text": "Profit and Loss Statement"}"#.to_string()];
    for (row, name) in ROWS.iter().chain(&[(15, "Total Expenses"), (17, "Profit (Loss)")]) {
        cells.push(format!(r#"{{"addr": "A{row}", "text": "{name}"}}"#));
    }
    for i in 0..years {
        let col = column_to_letters(i + 2);
        cells.push(format!(r#"{{"addr": "{col}4", "number": "{}"}}"#, 1984 + i));
        for (k, (row, _)) in ROWS.iter().enumerate() {
            let t = f64::from(i) / 3.0 + k as f64;
            let base = if k == 0 { 5.0 } else { 0.8 };
            let v = base + 0.4 * t.sin() + 0.01 * f64::from(i);
            cells.push(format!(r#"{{"addr": "{col}{row}", "number": "{v:.3}"}}"#));
        }
        cells.push(format!(r#"{{"addr": "{col}15", "formula": "=SUM({col}9:{col}13)"}}"#));
        cells.push(format!(r#"{{"addr": "{col}17", "formula": "={col}6-{col}15"}}"#));
    }
    format!(
        r#"{{"version": 1, "sheets": [{{"name": "Profit and Loss", "cells": [{}]}}]}}"#,
        cells.join(",\n")
    )
}

/// Mapping JSON binding every corpus concept across all `years` columns.
pub fn mapping_json(years: u32) -> String {
    let last = column_to_letters(years + 1);
    let blocks: Vec<String> = BLOCKS
        .iter()
        .map(|(id, row)| {
            format!(
                r#"{{"id": "{id}", "concept": "{id}", "region": "B{row}:{last}{row}", "legend": "B4:{last}4",
                  "axis": "row", "label_template": "{id} in {{arg}}"}}"#
            )
        })
        .collect();
    format!(r#"{{"version": 1, "blocks": [{}]}}"#, blocks.join(",\n"))
}

pub fn workbook(years: u32) -> Workbook {
    parse_native(&workbook_json(years)).expect("generated workbook parses")
}

/// Engine over the corpus ontology and a `years`-wide workbook.
pub fn engine(years: u32) -> Engine {
    Engine::new(
        workbook(years),
        Ontology::from_json(corpus::FIG1_ONTOLOGY).expect("corpus ontology"),
        Mapping::from_json(&mapping_json(years)).expect("generated mapping parses"),
    )
    .expect("generated corpus binds")
}
