//! Predicate language for assessment rules.
//!
//! ```text
//! or      -> and ('or' and)*
//! and     -> not ('and' not)*
//! not     -> 'not' not | compare
//! compare -> sum (CMP sum)?          CMP: < <= > >= = == != <>
//! sum     -> product (('+' | '-') product)*
//! product -> unary (('*' | '/') unary)*
//! unary   -> '-' unary | atom
//! atom    -> NUMBER | VAR | PARAM | NAME '(' or ')' | '(' or ')'
//! ```
//!
//! `VAR` is one of `value`, `arg`, `prev_value`, `next_value`; any other bare
//! identifier is a community parameter.

use std::collections::BTreeSet;
use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::arg::Arg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Value,
    Arg,
    PrevValue,
    NextValue,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::Value => "value",
            Var::Arg => "arg",
            Var::PrevValue => "prev_value",
            Var::NextValue => "next_value",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        match name {
            "value" => Some(Var::Value),
            "arg" => Some(Var::Arg),
            "prev_value" => Some(Var::PrevValue),
            "next_value" => Some(Var::NextValue),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleExpr {
    Number(Decimal),
    Param(String),
    Var(Var),
    /// Value of another concept's intended function at an argument.
    Apply { concept: String, arg: Box<RuleExpr> },
    Neg(Box<RuleExpr>),
    Arith { op: ArithOp, left: Box<RuleExpr>, right: Box<RuleExpr> },
    Compare { op: CmpOp, left: Box<RuleExpr>, right: Box<RuleExpr> },
    And(Box<RuleExpr>, Box<RuleExpr>),
    Or(Box<RuleExpr>, Box<RuleExpr>),
    Not(Box<RuleExpr>),
}

/// When an assessment rule is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleMode {
    /// Judges each argument/value pair on its own.
    Value,
    /// Judges each pair relative to its neighbours.
    Domain,
    /// Relates several concepts over their shared arguments.
    Invariant,
}

impl fmt::Display for RuleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleMode::Value => "value",
            RuleMode::Domain => "domain",
            RuleMode::Invariant => "invariant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleType {
    Number,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleParseError {
    #[error("rule syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule type error: {0}")]
pub struct RuleTypeError(pub String);

/// Failure while evaluating a predicate at one argument/value pair.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct RuleEvalError(pub String);

impl RuleExpr {
    pub fn parse(src: &str) -> Result<Self, RuleParseError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, idx: 0 };
        let expr = p.or()?;
        if p.peek() != &Tok::Eof {
            return p.fail("operator or end of rule");
        }
        Ok(expr)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let RuleExpr::Var(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let RuleExpr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Concepts referenced through function application, in first-use order.
    pub fn applied_concepts(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let RuleExpr::Apply { concept, .. } = e {
                if !out.contains(concept) {
                    out.push(concept.clone());
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&RuleExpr)) {
        f(self);
        match self {
            RuleExpr::Number(_) | RuleExpr::Param(_) | RuleExpr::Var(_) => {}
            RuleExpr::Apply { arg, .. } => arg.walk(f),
            RuleExpr::Neg(e) | RuleExpr::Not(e) => e.walk(f),
            RuleExpr::Arith { left, right, .. }
            | RuleExpr::Compare { left, right, .. }
            | RuleExpr::And(left, right)
            | RuleExpr::Or(left, right) => {
                left.walk(f);
                right.walk(f);
            }
        }
    }

    /// Rewrites every applied concept name.
    pub fn map_concepts(&mut self, f: &mut impl FnMut(&str) -> Option<String>) -> Result<(), String> {
        match self {
            RuleExpr::Number(_) | RuleExpr::Param(_) | RuleExpr::Var(_) => Ok(()),
            RuleExpr::Apply { concept, arg } => {
                *concept = f(concept).ok_or_else(|| concept.clone())?;
                arg.map_concepts(f)
            }
            RuleExpr::Neg(e) | RuleExpr::Not(e) => e.map_concepts(f),
            RuleExpr::Arith { left, right, .. }
            | RuleExpr::Compare { left, right, .. }
            | RuleExpr::And(left, right)
            | RuleExpr::Or(left, right) => {
                left.map_concepts(f)?;
                right.map_concepts(f)
            }
        }
    }

    pub fn type_of(&self) -> Result<RuleType, RuleTypeError> {
        let expect = |e: &RuleExpr, want: RuleType| -> Result<(), RuleTypeError> {
            let got = e.type_of()?;
            if got == want {
                Ok(())
            } else {
                Err(RuleTypeError(format!("`{e}` is {got:?}, expected {want:?}")))
            }
        };
        match self {
            RuleExpr::Number(_) | RuleExpr::Param(_) | RuleExpr::Var(_) => Ok(RuleType::Number),
            RuleExpr::Apply { arg, .. } => {
                expect(arg, RuleType::Number)?;
                Ok(RuleType::Number)
            }
            RuleExpr::Neg(e) => {
                expect(e, RuleType::Number)?;
                Ok(RuleType::Number)
            }
            RuleExpr::Arith { left, right, .. } => {
                expect(left, RuleType::Number)?;
                expect(right, RuleType::Number)?;
                Ok(RuleType::Number)
            }
            RuleExpr::Compare { left, right, .. } => {
                expect(left, RuleType::Number)?;
                expect(right, RuleType::Number)?;
                Ok(RuleType::Bool)
            }
            RuleExpr::And(l, r) | RuleExpr::Or(l, r) => {
                expect(l, RuleType::Bool)?;
                expect(r, RuleType::Bool)?;
                Ok(RuleType::Bool)
            }
            RuleExpr::Not(e) => {
                expect(e, RuleType::Bool)?;
                Ok(RuleType::Bool)
            }
        }
    }

    /// Checks that the predicate is boolean and uses only what `mode` binds.
    pub fn check_predicate(&self, mode: RuleMode) -> Result<(), RuleTypeError> {
        if self.type_of()? != RuleType::Bool {
            return Err(RuleTypeError(format!("predicate `{self}` is not boolean")));
        }
        let vars = self.vars();
        let allowed: &[Var] = match mode {
            RuleMode::Value => &[Var::Value, Var::Arg],
            RuleMode::Domain => &[Var::Value, Var::Arg, Var::PrevValue, Var::NextValue],
            RuleMode::Invariant => &[Var::Arg],
        };
        if let Some(bad) = vars.iter().find(|v| !allowed.contains(v)) {
            return Err(RuleTypeError(format!("`{}` is not bound in {mode} mode", bad.name())));
        }
        if mode == RuleMode::Invariant && self.applied_concepts().is_empty() {
            return Err(RuleTypeError("an invariant must apply at least one concept".into()));
        }
        Ok(())
    }

    pub fn eval(&self, env: &dyn RuleEnv) -> Result<RuleValue, RuleEvalError> {
        Ok(match self {
            RuleExpr::Number(n) => RuleValue::Number(*n),
            RuleExpr::Param(name) => RuleValue::Number(env.param(name)?),
            RuleExpr::Var(v) => match env.var(*v)? {
                Arg::Number(n) => RuleValue::Number(n),
                Arg::Text(t) => RuleValue::Text(t),
            },
            RuleExpr::Apply { concept, arg } => {
                let arg = match arg.eval(env)? {
                    RuleValue::Number(n) => Arg::Number(n),
                    RuleValue::Text(t) => Arg::Text(t),
                    RuleValue::Bool(_) => return Err(RuleEvalError("boolean used as argument".into())),
                };
                RuleValue::Number(env.apply(concept, &arg)?)
            }
            RuleExpr::Neg(e) => RuleValue::Number(-e.eval(env)?.number()?),
            RuleExpr::Arith { op, left, right } => {
                let l = left.eval(env)?.number()?;
                let r = right.eval(env)?.number()?;
                let overflow = || RuleEvalError("arithmetic overflow".into());
                RuleValue::Number(match op {
                    ArithOp::Add => l.checked_add(r).ok_or_else(overflow)?,
                    ArithOp::Sub => l.checked_sub(r).ok_or_else(overflow)?,
                    ArithOp::Mul => l.checked_mul(r).ok_or_else(overflow)?,
                    ArithOp::Div => {
                        if r.is_zero() {
                            return Err(RuleEvalError("division by zero".into()));
                        }
                        l.checked_div(r).ok_or_else(overflow)?
                    }
                })
            }
            RuleExpr::Compare { op, left, right } => {
                let l = left.eval(env)?.number()?;
                let r = right.eval(env)?.number()?;
                RuleValue::Bool(match op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                })
            }
            // both sides are evaluated so an error anywhere surfaces
            RuleExpr::And(l, r) => {
                let (a, b) = (l.eval(env)?.boolean()?, r.eval(env)?.boolean()?);
                RuleValue::Bool(a && b)
            }
            RuleExpr::Or(l, r) => {
                let (a, b) = (l.eval(env)?.boolean()?, r.eval(env)?.boolean()?);
                RuleValue::Bool(a || b)
            }
            RuleExpr::Not(e) => RuleValue::Bool(!e.eval(env)?.boolean()?),
        })
    }

    fn prec(&self) -> u8 {
        match self {
            RuleExpr::Or(..) => 1,
            RuleExpr::And(..) => 2,
            RuleExpr::Not(_) => 3,
            RuleExpr::Compare { .. } => 4,
            RuleExpr::Arith { op: ArithOp::Add | ArithOp::Sub, .. } => 5,
            RuleExpr::Arith { .. } => 6,
            RuleExpr::Neg(_) => 7,
            _ => 8,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prec();
        match self {
            RuleExpr::Number(n) => write!(f, "{}", n.normalize()),
            RuleExpr::Param(name) => f.write_str(name),
            RuleExpr::Var(v) => f.write_str(v.name()),
            RuleExpr::Apply { concept, arg } => write!(f, "{}({arg})", concept.replace('-', "_")),
            RuleExpr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, 7)
            }
            RuleExpr::Arith { op, left, right } => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                };
                left.fmt_child(f, p)?;
                write!(f, " {sym} ")?;
                right.fmt_child(f, p + 1)
            }
            RuleExpr::Compare { op, left, right } => {
                left.fmt_child(f, 5)?;
                write!(f, " {} ", op.symbol())?;
                right.fmt_child(f, 5)
            }
            RuleExpr::And(l, r) => {
                l.fmt_child(f, 2)?;
                f.write_str(" and ")?;
                r.fmt_child(f, 3)
            }
            RuleExpr::Or(l, r) => {
                l.fmt_child(f, 1)?;
                f.write_str(" or ")?;
                r.fmt_child(f, 2)
            }
            RuleExpr::Not(e) => {
                f.write_str("not ")?;
                e.fmt_child(f, 3)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleValue {
    Number(Decimal),
    Bool(bool),
    Text(String),
}

impl RuleValue {
    pub fn number(self) -> Result<Decimal, RuleEvalError> {
        match self {
            RuleValue::Number(n) => Ok(n),
            RuleValue::Text(t) => Err(RuleEvalError(format!("`{t}` is not a number"))),
            RuleValue::Bool(_) => Err(RuleEvalError("boolean used as a number".into())),
        }
    }

    pub fn boolean(self) -> Result<bool, RuleEvalError> {
        match self {
            RuleValue::Bool(b) => Ok(b),
            _ => Err(RuleEvalError("number used as a truth value".into())),
        }
    }
}

/// Bindings a predicate is evaluated against.
pub trait RuleEnv {
    fn var(&self, var: Var) -> Result<Arg, RuleEvalError>;
    fn param(&self, name: &str) -> Result<Decimal, RuleEvalError>;
    fn apply(&self, concept: &str, arg: &Arg) -> Result<Decimal, RuleEvalError>;
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(Decimal),
    Ident(String),
    Cmp(CmpOp),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, RuleParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|(_, c)| *c);
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().map(|(_, c)| c).collect();
        let (tok, len) = match (c, two.as_str()) {
            (_, "<=") => (Tok::Cmp(CmpOp::Le), 2),
            (_, ">=") => (Tok::Cmp(CmpOp::Ge), 2),
            (_, "==") => (Tok::Cmp(CmpOp::Eq), 2),
            (_, "!=") | (_, "<>") => (Tok::Cmp(CmpOp::Ne), 2),
            (_, "&&") => (Tok::Ident("and".into()), 2),
            (_, "||") => (Tok::Ident("or".into()), 2),
            ('<', _) => (Tok::Cmp(CmpOp::Lt), 1),
            ('>', _) => (Tok::Cmp(CmpOp::Gt), 1),
            ('=', _) => (Tok::Cmp(CmpOp::Eq), 1),
            ('≤', _) => (Tok::Cmp(CmpOp::Le), 1),
            ('≥', _) => (Tok::Cmp(CmpOp::Ge), 1),
            ('≠', _) => (Tok::Cmp(CmpOp::Ne), 1),
            ('!', _) => (Tok::Ident("not".into()), 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            _ if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while at(j).is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    j += 1;
                }
                let end = chars.get(j).map_or(src.len(), |(p, _)| *p);
                let n = src[pos..end].parse::<Decimal>().map_err(|_| RuleParseError::Syntax {
                    position: pos,
                    expected: "number".into(),
                })?;
                out.push((pos, Tok::Number(n)));
                i = j;
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while at(j).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    j += 1;
                }
                let end = chars.get(j).map_or(src.len(), |(p, _)| *p);
                out.push((pos, Tok::Ident(src[pos..end].to_string())));
                i = j;
                continue;
            }
            _ => {
                return Err(RuleParseError::Syntax {
                    position: pos,
                    expected: "expression".into(),
                })
            }
        };
        out.push((pos, tok));
        i += len;
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.idx].1.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, RuleParseError> {
        Err(RuleParseError::Syntax {
            position: self.tokens[self.idx].0,
            expected: expected.into(),
        })
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn or(&mut self) -> Result<RuleExpr, RuleParseError> {
        let mut left = self.and()?;
        while self.keyword("or") {
            self.bump();
            left = RuleExpr::Or(Box::new(left), Box::new(self.and()?));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<RuleExpr, RuleParseError> {
        let mut left = self.not()?;
        while self.keyword("and") {
            self.bump();
            left = RuleExpr::And(Box::new(left), Box::new(self.not()?));
        }
        Ok(left)
    }

    fn not(&mut self) -> Result<RuleExpr, RuleParseError> {
        if self.keyword("not") {
            self.bump();
            return Ok(RuleExpr::Not(Box::new(self.not()?)));
        }
        self.compare()
    }

    fn compare(&mut self) -> Result<RuleExpr, RuleParseError> {
        let left = self.sum()?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let right = self.sum()?;
            if matches!(self.peek(), Tok::Cmp(_)) {
                return self.fail("'and' or 'or' between comparisons");
            }
            return Ok(RuleExpr::Compare {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        Ok(left)
    }

    fn sum(&mut self) -> Result<RuleExpr, RuleParseError> {
        let mut left = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.product()?;
            left = RuleExpr::Arith { op, left: Box::new(left), right: Box::new(right) };
        }
    }

    fn product(&mut self) -> Result<RuleExpr, RuleParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.unary()?;
            left = RuleExpr::Arith { op, left: Box::new(left), right: Box::new(right) };
        }
    }

    fn unary(&mut self) -> Result<RuleExpr, RuleParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(RuleExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<RuleExpr, RuleParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(RuleExpr::Number(n))
            }
            Tok::Ident(name) if !matches!(name.as_str(), "and" | "or" | "not") => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg = self.or()?;
                    if *self.peek() != Tok::RParen {
                        return self.fail("')'");
                    }
                    self.bump();
                    return Ok(RuleExpr::Apply { concept: name, arg: Box::new(arg) });
                }
                Ok(match Var::lookup(&name) {
                    Some(v) => RuleExpr::Var(v),
                    None => RuleExpr::Param(name),
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.or()?;
                if *self.peek() != Tok::RParen {
                    return self.fail("')'");
                }
                self.bump();
                Ok(inner)
            }
            _ => self.fail("number, variable, parameter, function call or '('"),
        }
    }
}
