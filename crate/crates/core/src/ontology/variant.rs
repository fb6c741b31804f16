use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::rule::{RuleEnv, RuleEvalError, RuleExpr, RuleType, Var};
use crate::arg::Arg;

/// Alternative way of computing a block's values under a frame.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantFn {
    /// Polynomial through the last `order + 1` samples, evaluated at the target.
    LagrangeExtrapolation(u8),
    /// Numeric expression over `arg` (the target), `value` (last sample) and
    /// `prev_value` (the sample before it).
    NamedFormula(RuleExpr),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariantError {
    #[error("unsupported extrapolation order {0} (expected 1 or 2)")]
    Order(u8),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("duplicate sample argument {0}")]
    DuplicateArg(f64),
    #[error("variant formula failed: {0}")]
    Formula(String),
}

impl VariantFn {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            VariantFn::LagrangeExtrapolation(1 | 2) => Ok(()),
            VariantFn::LagrangeExtrapolation(k) => Err(VariantError::Order(*k).to_string()),
            VariantFn::NamedFormula(expr) => {
                if expr.type_of().map_err(|e| e.to_string())? != RuleType::Number {
                    return Err(format!("variant formula `{expr}` is not numeric"));
                }
                if !expr.params().is_empty() || !expr.applied_concepts().is_empty() {
                    return Err(format!("variant formula `{expr}` may only use arg, value and prev_value"));
                }
                if expr.vars().contains(&Var::NextValue) {
                    return Err("variant formulas cannot look at next_value".into());
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for VariantFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantFn::LagrangeExtrapolation(k) => write!(f, "Lagrange extrapolation of order {k}"),
            VariantFn::NamedFormula(e) => write!(f, "{e}"),
        }
    }
}

/// Value of the variant at `target_arg`, from samples ordered by argument position.
pub fn variant_value(function: &VariantFn, samples: &[(f64, f64)], target_arg: f64) -> Result<f64, VariantError> {
    match function {
        VariantFn::LagrangeExtrapolation(order) => {
            if !(1..=2).contains(order) {
                return Err(VariantError::Order(*order));
            }
            let needed = usize::from(*order) + 1;
            if samples.len() < needed {
                return Err(VariantError::InsufficientSamples {
                    needed,
                    got: samples.len(),
                });
            }
            let nodes = &samples[samples.len() - needed..];
            lagrange(nodes, target_arg)
        }
        VariantFn::NamedFormula(expr) => {
            let last = samples.last().ok_or(VariantError::InsufficientSamples { needed: 1, got: 0 })?;
            let env = FormulaEnv {
                target: target_arg,
                value: last.1,
                prev: samples.len().checked_sub(2).map(|i| samples[i].1),
            };
            let value = expr
                .eval(&env)
                .and_then(|v| v.number())
                .map_err(|e| VariantError::Formula(e.to_string()))?;
            use rust_decimal::prelude::ToPrimitive;
            value.to_f64().ok_or_else(|| VariantError::Formula("result out of range".into()))
        }
    }
}

/// Lagrange form of the interpolating polynomial through `nodes`.
fn lagrange(nodes: &[(f64, f64)], x: f64) -> Result<f64, VariantError> {
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].iter().any(|b| b.0 == a.0) {
            return Err(VariantError::DuplicateArg(a.0));
        }
    }
    // at a node every factor is exactly 1 or 0, so samples come back unchanged
    let mut total = 0.0;
    for (i, &(xi, yi)) in nodes.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(xj, _)) in nodes.iter().enumerate() {
            if i != j {
                basis *= (x - xj) / (xi - xj);
            }
        }
        total += yi * basis;
    }
    Ok(total)
}

struct FormulaEnv {
    target: f64,
    value: f64,
    prev: Option<f64>,
}

fn to_decimal(f: f64) -> Result<Decimal, RuleEvalError> {
    crate::num::parse(&f.to_string()).map_err(RuleEvalError)
}

impl RuleEnv for FormulaEnv {
    fn var(&self, var: Var) -> Result<Arg, RuleEvalError> {
        match var {
            Var::Arg => to_decimal(self.target).map(Arg::Number),
            Var::Value => to_decimal(self.value).map(Arg::Number),
            Var::PrevValue => self
                .prev
                .ok_or_else(|| RuleEvalError("no previous sample".into()))
                .and_then(to_decimal)
                .map(Arg::Number),
            Var::NextValue => Err(RuleEvalError("next_value is unbound".into())),
        }
    }

    fn param(&self, name: &str) -> Result<Decimal, RuleEvalError> {
        Err(RuleEvalError(format!("parameter `{name}` is unbound")))
    }

    fn apply(&self, concept: &str, _arg: &Arg) -> Result<Decimal, RuleEvalError> {
        Err(RuleEvalError(format!("`{concept}` cannot be applied in a variant")))
    }
}

/// On-disk form of a variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct VariantSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrange: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}
