//! Cell grid, formula language, evaluation and file loading.

mod address;
mod eval;
mod formula;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use rust_decimal::Decimal;

pub use address::{column_to_letters, letters_to_column, AddressError, CellAddress, CellRange};
pub use eval::{evaluate, evaluate_partial, EvalError, Evaluation, PartialEvaluation, Value};
pub use formula::{parse_formula, BinaryOp, FormulaError, FormulaExpr, Function};
pub use io::{load_workbook, parse_csv, parse_native, to_native, LoadError, WorkbookFormat};

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Empty,
    Text(String),
    Number(Decimal),
    Formula { source: String, expr: FormulaExpr },
}

impl CellContent {
    pub fn formula(source: &str) -> Result<Self, FormulaError> {
        Ok(CellContent::Formula {
            source: source.to_string(),
            expr: parse_formula(source)?,
        })
    }

    pub fn is_formula(&self) -> bool {
        matches!(self, CellContent::Formula { .. })
    }
}

/// How a cell's value was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Input,
    Computed,
    Imported(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Input => f.write_str("input"),
            Provenance::Computed => f.write_str("computed"),
            Provenance::Imported(src) => write!(f, "imported:{src}"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "input" => Ok(Provenance::Input),
            "computed" => Ok(Provenance::Computed),
            _ => match s.strip_prefix("imported:") {
                Some(src) => Ok(Provenance::Imported(src.to_string())),
                None => Err(format!("unknown provenance `{s}`")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub content: CellContent,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkbookError {
    #[error("duplicate cell {addr} in sheet `{sheet}`")]
    DuplicateAddress { sheet: String, addr: CellAddress },
    #[error("formula cell {addr} in sheet `{sheet}` must be tagged computed, found {provenance}")]
    FormulaNotComputed {
        sheet: String,
        addr: CellAddress,
        provenance: Provenance,
    },
    #[error("duplicate sheet name `{0}`")]
    DuplicateSheet(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sheet {
    name: String,
    cells: BTreeMap<CellAddress, Cell>,
}

impl Sheet {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cells: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Inserts a cell; formulas are tagged computed, everything else input.
    pub fn insert(&mut self, addr: CellAddress, content: CellContent) -> Result<(), WorkbookError> {
        let provenance = if content.is_formula() {
            Provenance::Computed
        } else {
            Provenance::Input
        };
        self.insert_with(addr, content, provenance)
    }

    pub fn insert_with(
        &mut self,
        addr: CellAddress,
        content: CellContent,
        provenance: Provenance,
    ) -> Result<(), WorkbookError> {
        if content.is_formula() && provenance != Provenance::Computed {
            return Err(WorkbookError::FormulaNotComputed {
                sheet: self.name.clone(),
                addr,
                provenance,
            });
        }
        if self.cells.contains_key(&addr) {
            return Err(WorkbookError::DuplicateAddress {
                sheet: self.name.clone(),
                addr,
            });
        }
        self.cells.insert(addr, Cell { content, provenance });
        Ok(())
    }

    pub fn get(&self, addr: CellAddress) -> Option<&Cell> {
        self.cells.get(&addr)
    }

    pub fn content(&self, addr: CellAddress) -> &CellContent {
        self.cells.get(&addr).map_or(&CellContent::Empty, |c| &c.content)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (CellAddress, &Cell)> {
        self.cells.iter().map(|(a, c)| (*a, c))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Bottom-right corner of the used area, `None` for an empty sheet.
    pub fn extent(&self) -> Option<(u32, u32)> {
        let rows = self.cells.keys().map(|a| a.row()).max()?;
        let cols = self.cells.keys().map(|a| a.column()).max()?;
        Some((cols, rows))
    }

    /// Copy of this sheet with every cell moved by `rows`, formula references included.
    pub fn shifted_rows(&self, rows: i64) -> Option<Sheet> {
        let mut out = Sheet::new(self.name.clone());
        for (addr, cell) in self.cells() {
            let content = match &cell.content {
                CellContent::Formula { expr, .. } => {
                    let expr = shift_expr(expr, rows)?;
                    CellContent::Formula { source: expr.render(), expr }
                }
                other => other.clone(),
            };
            out.cells.insert(
                addr.offset(0, rows)?,
                Cell {
                    content,
                    provenance: cell.provenance.clone(),
                },
            );
        }
        Some(out)
    }
}

fn shift_expr(expr: &FormulaExpr, rows: i64) -> Option<FormulaExpr> {
    Some(match expr {
        FormulaExpr::Number(n) => FormulaExpr::Number(*n),
        FormulaExpr::Cell(a) => FormulaExpr::Cell(a.offset(0, rows)?),
        FormulaExpr::Range(r) => FormulaExpr::Range(r.offset(0, rows)?),
        FormulaExpr::Neg(e) => FormulaExpr::Neg(Box::new(shift_expr(e, rows)?)),
        FormulaExpr::Binary { op, left, right } => {
            FormulaExpr::binary(*op, shift_expr(left, rows)?, shift_expr(right, rows)?)
        }
        FormulaExpr::Call { function, args } => FormulaExpr::Call {
            function: *function,
            args: args.iter().map(|a| shift_expr(a, rows)).collect::<Option<_>>()?,
        },
    })
}

/// An ordered list of sheets whose formulas admit an evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Workbook {
    sheets: Vec<Sheet>,
}

impl Workbook {
    /// Validates sheet names and rejects workbooks with reference cycles.
    pub fn new(sheets: Vec<Sheet>) -> Result<Self, WorkbookError> {
        for (i, sheet) in sheets.iter().enumerate() {
            if sheets[..i].iter().any(|s| s.name == sheet.name) {
                return Err(WorkbookError::DuplicateSheet(sheet.name.clone()));
            }
        }
        let wb = Self { sheets };
        for idx in 0..wb.sheets.len() {
            eval::evaluation_order(&wb.sheets[idx])?;
        }
        Ok(wb)
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    /// The sheet functional blocks and cell lookups refer to.
    pub fn primary(&self) -> &Sheet {
        &self.sheets[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> CellAddress {
        s.parse().unwrap()
    }

    #[test]
    fn duplicate_address_rejected() {
        let mut sheet = Sheet::new("S");
        sheet.insert(addr("B6"), CellContent::Number(Decimal::ONE)).unwrap();
        let err = sheet.insert(addr("B6"), CellContent::Number(Decimal::TWO)).unwrap_err();
        assert!(matches!(err, WorkbookError::DuplicateAddress { .. }));
    }

    #[test]
    fn formula_must_be_computed() {
        let mut sheet = Sheet::new("S");
        let err = sheet
            .insert_with(addr("A1"), CellContent::formula("=1").unwrap(), Provenance::Input)
            .unwrap_err();
        assert!(matches!(err, WorkbookError::FormulaNotComputed { .. }));
    }

    #[test]
    fn provenance_strings() {
        for s in ["input", "computed", "imported:ledger-db"] {
            assert_eq!(s.parse::<Provenance>().unwrap().to_string(), s);
        }
        assert!("guessed".parse::<Provenance>().is_err());
    }

    #[test]
    fn shift_moves_references() {
        let mut sheet = Sheet::new("S");
        sheet.insert(addr("A1"), CellContent::Number(Decimal::ONE)).unwrap();
        sheet.insert(addr("A2"), CellContent::formula("=SUM(A1:A1)*A1").unwrap()).unwrap();
        let shifted = sheet.shifted_rows(1).unwrap();
        match shifted.content(addr("A3")) {
            CellContent::Formula { source, .. } => assert_eq!(source, "=SUM(A2:A2)*A2"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(sheet.shifted_rows(-1).is_none());
    }
}
