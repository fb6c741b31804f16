//! Native `.sachs.json` documents and values-only CSV.

use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::address::CellAddress;
use super::{CellContent, Provenance, Sheet, Workbook, WorkbookError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkbookFormat {
    Native,
    Csv,
}

impl WorkbookFormat {
    /// Guesses the format from the file name; anything not ending in `.csv` is native.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => WorkbookFormat::Csv,
            _ => WorkbookFormat::Native,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error{}: {reason}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, reason: String },
    #[error(transparent)]
    Workbook(#[from] WorkbookError),
}

impl LoadError {
    fn format(line: Option<usize>, reason: impl Into<String>) -> Self {
        LoadError::Format {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeDoc {
    version: u32,
    sheets: Vec<NativeSheet>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeSheet {
    name: String,
    #[serde(default)]
    cells: Vec<NativeCell>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeCell {
    addr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    number: Option<NativeNumber>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

/// Decimal written as a string; bare JSON numbers are accepted on input.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NativeNumber {
    Str(String),
    Num(serde_json::Number),
}

pub fn load_workbook(path: &Path, format: WorkbookFormat) -> Result<Workbook, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        WorkbookFormat::Native => parse_native(&text),
        WorkbookFormat::Csv => {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(|s| s.trim_end_matches(".sachs").to_string())
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| "Sheet1".to_string());
            parse_csv(&text, &name)
        }
    }
}

pub fn parse_native(text: &str) -> Result<Workbook, LoadError> {
    let doc: NativeDoc =
        serde_json::from_str(text).map_err(|e| LoadError::format(Some(e.line()), e.to_string()))?;
    if doc.version != 1 {
        return Err(LoadError::format(None, format!("unsupported version {}", doc.version)));
    }
    let mut sheets = Vec::with_capacity(doc.sheets.len());
    for ns in doc.sheets {
        let mut sheet = Sheet::new(ns.name);
        for nc in ns.cells {
            let addr: CellAddress = nc
                .addr
                .parse()
                .map_err(|e: super::AddressError| LoadError::format(None, e.to_string()))?;
            let where_ = || format!("{}!{}", sheet.name(), addr);
            let content = match (nc.text, nc.number, nc.formula) {
                (Some(t), None, None) => CellContent::Text(t),
                (None, Some(n), None) => {
                    let raw = match n {
                        NativeNumber::Str(s) => s,
                        NativeNumber::Num(n) => n.to_string(),
                    };
                    let n = crate::num::parse(&raw).map_err(|e| LoadError::format(None, format!("{}: {e}", where_())))?;
                    CellContent::Number(n)
                }
                (None, None, Some(f)) => CellContent::formula(&f)
                    .map_err(|e| LoadError::format(None, format!("{}: {e}", where_())))?,
                (None, None, None) => CellContent::Empty,
                _ => {
                    return Err(LoadError::format(
                        None,
                        format!("{}: a cell holds at most one of text, number, formula", where_()),
                    ))
                }
            };
            let provenance = match nc.provenance {
                Some(p) => p.parse().map_err(|e: String| LoadError::format(None, format!("{}: {e}", where_())))?,
                None if content.is_formula() => Provenance::Computed,
                None => Provenance::Input,
            };
            sheet.insert_with(addr, content, provenance)?;
        }
        sheets.push(sheet);
    }
    if sheets.is_empty() {
        sheets.push(Sheet::new("Sheet1"));
    }
    Ok(Workbook::new(sheets)?)
}

/// CSV is read as a single sheet; `=`-prefixed fields become formulas.
pub fn parse_csv(text: &str, sheet_name: &str) -> Result<Workbook, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut sheet = Sheet::new(sheet_name);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            LoadError::format(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row_idx + 1);
        for (col_idx, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let addr = CellAddress::new(col_idx as u32 + 1, row_idx as u32 + 1)
                .map_err(|e| LoadError::format(Some(line), e.to_string()))?;
            let content = if field.starts_with('=') {
                CellContent::formula(field).map_err(|e| LoadError::format(Some(line), format!("{addr}: {e}")))?
            } else if let Ok(n) = crate::num::parse(field) {
                CellContent::Number(n)
            } else {
                CellContent::Text(field.to_string())
            };
            sheet.insert(addr, content)?;
        }
    }
    Ok(Workbook::new(vec![sheet])?)
}

/// Serializes a workbook to the native JSON document.
pub fn to_native(workbook: &Workbook) -> String {
    let doc = NativeDoc {
        version: 1,
        sheets: workbook
            .sheets()
            .iter()
            .map(|sheet| NativeSheet {
                name: sheet.name().to_string(),
                cells: sheet
                    .cells()
                    .map(|(addr, cell)| {
                        let mut nc = NativeCell {
                            addr: addr.to_string(),
                            text: None,
                            number: None,
                            formula: None,
                            provenance: Some(cell.provenance.to_string()),
                        };
                        match &cell.content {
                            CellContent::Empty => {}
                            CellContent::Text(t) => nc.text = Some(t.clone()),
                            CellContent::Number(n) => nc.number = Some(NativeNumber::Str(render_decimal(n))),
                            CellContent::Formula { source, .. } => nc.formula = Some(source.clone()),
                        }
                        nc
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

fn render_decimal(n: &Decimal) -> String {
    n.normalize().to_string()
}
