use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::address::CellAddress;
use super::formula::{BinaryOp, FormulaExpr, Function};
use super::{CellContent, Sheet, Workbook};

/// Evaluated cell value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Value {
    #[default]
    Empty,
    Number(Decimal),
    Text(String),
}

impl Value {
    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Empty => Ok(()),
            Value::Number(n) => write!(f, "{}", n.normalize()),
            Value::Text(t) => f.write_str(t),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Empty => serializer.serialize_none(),
            Value::Number(n) => crate::num::serialize(n, serializer),
            Value::Text(t) => serializer.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::Null => Ok(Value::Empty),
            serde_json::Value::String(t) => Ok(Value::Text(t)),
            n @ serde_json::Value::Number(_) => crate::num::deserialize(n)
                .map(Value::Number)
                .map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("not a cell value: {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("reference cycle in sheet `{sheet}`: {}", render_path(path))]
    Cycle { sheet: String, path: Vec<CellAddress> },
    #[error("type error in {sheet}!{cell}: {reason}")]
    Type {
        sheet: String,
        cell: CellAddress,
        reason: String,
    },
    #[error("division by zero in {sheet}!{cell}")]
    DivisionByZero { sheet: String, cell: CellAddress },
}

fn render_path(path: &[CellAddress]) -> String {
    path.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" -> ")
}

/// Values of every non-empty cell, one map per sheet in workbook order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    sheets: Vec<(String, BTreeMap<CellAddress, Value>)>,
}

impl Evaluation {
    /// Value in the primary sheet; absent cells are `Empty`.
    pub fn get(&self, addr: CellAddress) -> &Value {
        self.get_in(0, addr)
    }

    pub fn get_in(&self, sheet: usize, addr: CellAddress) -> &Value {
        static EMPTY: Value = Value::Empty;
        self.sheets
            .get(sheet)
            .and_then(|(_, m)| m.get(&addr))
            .unwrap_or(&EMPTY)
    }

    pub fn sheet(&self, name: &str) -> Option<&BTreeMap<CellAddress, Value>> {
        self.sheets.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn primary(&self) -> &BTreeMap<CellAddress, Value> {
        &self.sheets[0].1
    }
}

/// Result of evaluating only what a set of requested cells needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialEvaluation {
    pub values: BTreeMap<CellAddress, Value>,
    /// Every cell whose content the evaluator read.
    pub touched: BTreeSet<CellAddress>,
}

/// Topological order of every formula cell in the sheet.
pub(crate) fn evaluation_order(sheet: &Sheet) -> Result<Vec<CellAddress>, EvalError> {
    let formulas: Vec<CellAddress> = sheet
        .cells()
        .filter(|(_, c)| c.content.is_formula())
        .map(|(a, _)| a)
        .collect();
    order_from(sheet, &formulas)
}

fn order_from(sheet: &Sheet, roots: &[CellAddress]) -> Result<Vec<CellAddress>, EvalError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: BTreeMap<CellAddress, Mark> = BTreeMap::new();
    let mut order = Vec::new();
    for &root in roots {
        if marks.contains_key(&root) {
            continue;
        }
        // explicit stack of (cell, its formula precedents, next index)
        let mut stack: Vec<(CellAddress, Vec<CellAddress>, usize)> = Vec::new();
        let push = |addr: CellAddress, stack: &mut Vec<_>, marks: &mut BTreeMap<_, _>| {
            let deps = match sheet.content(addr) {
                CellContent::Formula { expr, .. } => expr.precedents().into_iter().collect(),
                _ => Vec::new(),
            };
            marks.insert(addr, Mark::Active);
            stack.push((addr, deps, 0));
        };
        push(root, &mut stack, &mut marks);
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let next = top.1[top.2];
                top.2 += 1;
                match marks.get(&next) {
                    Some(Mark::Done) => {}
                    Some(Mark::Active) => {
                        let start = stack.iter().position(|(a, _, _)| *a == next).expect("active on stack");
                        let mut path: Vec<CellAddress> = stack[start..].iter().map(|(a, _, _)| *a).collect();
                        path.push(next);
                        return Err(EvalError::Cycle {
                            sheet: sheet.name().to_string(),
                            path,
                        });
                    }
                    None => push(next, &mut stack, &mut marks),
                }
            } else {
                let (addr, _, _) = stack.pop().expect("non-empty");
                marks.insert(addr, Mark::Done);
                order.push(addr);
            }
        }
    }
    Ok(order)
}

struct SheetEval<'a> {
    sheet: &'a Sheet,
    values: BTreeMap<CellAddress, Value>,
    touched: BTreeSet<CellAddress>,
}

impl SheetEval<'_> {
    fn type_error(&self, cell: CellAddress, reason: String) -> EvalError {
        EvalError::Type {
            sheet: self.sheet.name().to_string(),
            cell,
            reason,
        }
    }

    fn read(&mut self, addr: CellAddress) -> Value {
        self.touched.insert(addr);
        match self.sheet.content(addr) {
            CellContent::Empty => Value::Empty,
            CellContent::Text(t) => Value::Text(t.clone()),
            CellContent::Number(n) => Value::Number(*n),
            // formulas are evaluated before their dependents
            CellContent::Formula { .. } => self.values.get(&addr).cloned().unwrap_or_default(),
        }
    }

    fn run(&mut self, order: &[CellAddress]) -> Result<(), EvalError> {
        for &addr in order {
            self.touched.insert(addr);
            if let CellContent::Formula { expr, .. } = self.sheet.content(addr) {
                let n = self.number(addr, expr)?;
                self.values.insert(addr, Value::Number(n));
            }
        }
        Ok(())
    }

    fn number(&mut self, cell: CellAddress, expr: &FormulaExpr) -> Result<Decimal, EvalError> {
        let overflow = |this: &Self| this.type_error(cell, "arithmetic overflow".into());
        match expr {
            FormulaExpr::Number(n) => Ok(*n),
            FormulaExpr::Cell(addr) => match self.read(*addr) {
                Value::Empty => Ok(Decimal::ZERO),
                Value::Number(n) => Ok(n),
                Value::Text(_) => Err(self.type_error(cell, format!("{addr} holds text"))),
            },
            FormulaExpr::Range(range) => Err(self.type_error(cell, format!("range {range} used as a number"))),
            FormulaExpr::Neg(inner) => Ok(-self.number(cell, inner)?),
            FormulaExpr::Binary { op, left, right } => {
                let l = self.number(cell, left)?;
                let r = self.number(cell, right)?;
                match op {
                    BinaryOp::Add => l.checked_add(r).ok_or_else(|| overflow(self)),
                    BinaryOp::Sub => l.checked_sub(r).ok_or_else(|| overflow(self)),
                    BinaryOp::Mul => l.checked_mul(r).ok_or_else(|| overflow(self)),
                    BinaryOp::Div => {
                        if r.is_zero() {
                            return Err(EvalError::DivisionByZero {
                                sheet: self.sheet.name().to_string(),
                                cell,
                            });
                        }
                        l.checked_div(r).ok_or_else(|| overflow(self))
                    }
                }
            }
            FormulaExpr::Call { function, args } => {
                let mut items = Vec::new();
                for arg in args {
                    match arg {
                        FormulaExpr::Range(range) => {
                            for addr in range.cells() {
                                // empty and text cells inside ranges are skipped
                                if let Value::Number(n) = self.read(addr) {
                                    items.push(n);
                                }
                            }
                        }
                        FormulaExpr::Cell(addr) => match self.read(*addr) {
                            Value::Empty => {}
                            Value::Number(n) => items.push(n),
                            Value::Text(_) => {
                                return Err(self.type_error(cell, format!("{addr} holds text")));
                            }
                        },
                        other => items.push(self.number(cell, other)?),
                    }
                }
                self.aggregate(cell, *function, &items)
            }
        }
    }

    fn aggregate(&self, cell: CellAddress, function: Function, items: &[Decimal]) -> Result<Decimal, EvalError> {
        let sum = || {
            items
                .iter()
                .try_fold(Decimal::ZERO, |acc, n| acc.checked_add(*n))
                .ok_or_else(|| self.type_error(cell, "arithmetic overflow".into()))
        };
        match function {
            Function::Sum => sum(),
            Function::Count => Ok(Decimal::from(items.len())),
            Function::Avg => {
                if items.is_empty() {
                    return Err(EvalError::DivisionByZero {
                        sheet: self.sheet.name().to_string(),
                        cell,
                    });
                }
                Ok(sum()? / Decimal::from(items.len()))
            }
            Function::Min => Ok(items.iter().copied().min().unwrap_or_default()),
            Function::Max => Ok(items.iter().copied().max().unwrap_or_default()),
        }
    }

    fn finish(mut self) -> BTreeMap<CellAddress, Value> {
        for (addr, cell) in self.sheet.cells() {
            match &cell.content {
                CellContent::Empty | CellContent::Formula { .. } => {}
                CellContent::Text(t) => {
                    self.values.insert(addr, Value::Text(t.clone()));
                }
                CellContent::Number(n) => {
                    self.values.insert(addr, Value::Number(*n));
                }
            }
        }
        self.values
    }
}

/// Evaluates every sheet in topological order.
pub fn evaluate(workbook: &Workbook) -> Result<Evaluation, EvalError> {
    let mut sheets = Vec::with_capacity(workbook.sheets().len());
    for sheet in workbook.sheets() {
        let order = evaluation_order(sheet)?;
        let mut ev = SheetEval {
            sheet,
            values: BTreeMap::new(),
            touched: BTreeSet::new(),
        };
        ev.run(&order)?;
        sheets.push((sheet.name().to_string(), ev.finish()));
    }
    Ok(Evaluation { sheets })
}

/// Evaluates only the requested cells of one sheet and what they transitively reference.
pub fn evaluate_partial(sheet: &Sheet, requested: &[CellAddress]) -> Result<PartialEvaluation, EvalError> {
    let order = order_from(sheet, requested)?;
    let mut ev = SheetEval {
        sheet,
        values: BTreeMap::new(),
        touched: BTreeSet::new(),
    };
    ev.run(&order)?;
    let mut values = BTreeMap::new();
    for &addr in requested {
        let v = ev.read(addr);
        values.insert(addr, v);
    }
    Ok(PartialEvaluation {
        values,
        touched: ev.touched,
    })
}
