//! Formula language: `=`-prefixed arithmetic over numbers, A1 references,
//! colon ranges and a handful of aggregate functions.
//!
//! Grammar (left-associative binary operators):
//!
//! ```text
//! formula -> '=' expr EOF
//! expr    -> term (('+' | '-') term)*
//! term    -> unary (('*' | '/') unary)*
//! unary   -> '-' unary | '+' unary | atom
//! atom    -> NUMBER | REF (':' REF)? | FUNC '(' (expr (',' expr)*)? ')' | '(' expr ')'
//! ```

use std::collections::BTreeSet;
use std::fmt;

use rust_decimal::Decimal;

use super::address::{letters_to_column, CellAddress, CellRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sum,
    Avg,
    Min,
    Max,
    Count,
}

impl Function {
    pub const ALL: [Function; 5] = [
        Function::Sum,
        Function::Avg,
        Function::Min,
        Function::Max,
        Function::Count,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sum => "SUM",
            Function::Avg => "AVG",
            Function::Min => "MIN",
            Function::Max => "MAX",
            Function::Count => "COUNT",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "SUM" => Some(Function::Sum),
            "AVG" | "AVERAGE" => Some(Function::Avg),
            "MIN" => Some(Function::Min),
            "MAX" => Some(Function::Max),
            "COUNT" => Some(Function::Count),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaExpr {
    Number(Decimal),
    Cell(CellAddress),
    Range(CellRange),
    Neg(Box<FormulaExpr>),
    Binary {
        op: BinaryOp,
        left: Box<FormulaExpr>,
        right: Box<FormulaExpr>,
    },
    Call {
        function: Function,
        args: Vec<FormulaExpr>,
    },
}

impl FormulaExpr {
    pub fn binary(op: BinaryOp, left: FormulaExpr, right: FormulaExpr) -> Self {
        FormulaExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Every address referenced by the expression, ranges expanded.
    pub fn precedents(&self) -> BTreeSet<CellAddress> {
        let mut out = BTreeSet::new();
        self.collect_precedents(&mut out);
        out
    }

    fn collect_precedents(&self, out: &mut BTreeSet<CellAddress>) {
        match self {
            FormulaExpr::Number(_) => {}
            FormulaExpr::Cell(addr) => {
                out.insert(*addr);
            }
            FormulaExpr::Range(range) => out.extend(range.cells()),
            FormulaExpr::Neg(inner) => inner.collect_precedents(out),
            FormulaExpr::Binary { left, right, .. } => {
                left.collect_precedents(out);
                right.collect_precedents(out);
            }
            FormulaExpr::Call { args, .. } => {
                for arg in args {
                    arg.collect_precedents(out);
                }
            }
        }
    }

    /// Source text including the leading `=`.
    pub fn render(&self) -> String {
        format!("={self}")
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        match self {
            FormulaExpr::Number(n) => write!(f, "{}", n.normalize()),
            FormulaExpr::Cell(addr) => write!(f, "{addr}"),
            FormulaExpr::Range(range) => write!(f, "{range}"),
            FormulaExpr::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_prec(f, 3)
            }
            FormulaExpr::Binary { op, left, right } => {
                let prec = op.precedence();
                let parens = prec < min_prec;
                if parens {
                    f.write_str("(")?;
                }
                left.fmt_prec(f, prec)?;
                write!(f, "{}", op.symbol())?;
                // right operand of an equal-precedence operator needs parens
                right.fmt_prec(f, prec + 1)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            FormulaExpr::Call { function, args } => {
                write!(f, "{}(", function.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    arg.fmt_prec(f, 0)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for FormulaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at position {position}: expected one of {}", expected.join(", "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
    },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(Decimal),
    Cell(CellAddress),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str, start: usize) -> Result<Vec<(usize, Token)>, FormulaError> {
        let mut lexer = Lexer { src, pos: start };
        let mut out = Vec::new();
        loop {
            let (pos, tok) = lexer.next_token()?;
            let done = tok == Token::Eof;
            out.push((pos, tok));
            if done {
                return Ok(out);
            }
        }
    }

    fn next_token(&mut self) -> Result<(usize, Token), FormulaError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((start, Token::Eof));
        };
        let single = match b {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            b',' => Some(Token::Comma),
            b':' => Some(Token::Colon),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if b.is_ascii_digit() || b == b'.' {
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            let text = &self.src[start..self.pos];
            let n = text.parse::<Decimal>().map_err(|_| FormulaError::Syntax {
                position: start,
                expected: vec!["number".into()],
            })?;
            return Ok((start, Token::Number(n)));
        }
        if b.is_ascii_alphabetic() {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_alphabetic() {
                self.pos += 1;
            }
            let letters_end = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            if letters_end < self.pos {
                if let Ok(addr) = word.to_ascii_uppercase().parse::<CellAddress>() {
                    if letters_to_column(&word[..letters_end - start]).is_some() {
                        return Ok((start, Token::Cell(addr)));
                    }
                }
            }
            return Ok((start, Token::Name(word.to_string())));
        }
        Err(FormulaError::Syntax {
            position: start,
            expected: expected(&["number", "reference", "function", "'('", "'-'"]),
        })
    }
}

fn expected(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx].1
    }

    fn position(&self) -> usize {
        self.tokens[self.idx].0
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.idx].1.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        tok
    }

    fn fail<T>(&self, items: &[&str]) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            position: self.position(),
            expected: expected(items),
        })
    }

    fn expr(&mut self) -> Result<FormulaExpr, FormulaError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            left = FormulaExpr::binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<FormulaExpr, FormulaError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.unary()?;
            left = FormulaExpr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<FormulaExpr, FormulaError> {
        match self.peek() {
            Token::Minus => {
                self.bump();
                Ok(FormulaExpr::Neg(Box::new(self.unary()?)))
            }
            Token::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<FormulaExpr, FormulaError> {
        const ATOM: &[&str] = &["number", "reference", "function", "'('", "'-'"];
        match self.bump() {
            Token::Number(n) => Ok(FormulaExpr::Number(n)),
            Token::Cell(addr) => {
                if *self.peek() == Token::Colon {
                    self.bump();
                    match self.bump() {
                        Token::Cell(end) => Ok(FormulaExpr::Range(CellRange::new(addr, end))),
                        _ => {
                            self.idx -= 1;
                            self.fail(&["reference"])
                        }
                    }
                } else {
                    Ok(FormulaExpr::Cell(addr))
                }
            }
            Token::Name(name) => {
                if *self.peek() != Token::LParen {
                    self.idx -= 1;
                    return self.fail(&["reference", "'(' after function name"]);
                }
                let function = Function::lookup(&name).ok_or(FormulaError::UnknownFunction(name))?;
                self.bump();
                let mut args = Vec::new();
                if *self.peek() == Token::RParen {
                    self.bump();
                    return Ok(FormulaExpr::Call { function, args });
                }
                loop {
                    args.push(self.expr()?);
                    match self.peek() {
                        Token::Comma => {
                            self.bump();
                        }
                        Token::RParen => {
                            self.bump();
                            return Ok(FormulaExpr::Call { function, args });
                        }
                        _ => return self.fail(&["','", "')'"]),
                    }
                }
            }
            Token::LParen => {
                let inner = self.expr()?;
                if *self.peek() != Token::RParen {
                    return self.fail(&["')'", "operator"]);
                }
                self.bump();
                Ok(inner)
            }
            Token::Eof => self.fail(ATOM),
            _ => {
                self.idx -= 1;
                self.fail(ATOM)
            }
        }
    }
}

/// Parses formula source text; the source must start with `=`.
pub fn parse_formula(source: &str) -> Result<FormulaExpr, FormulaError> {
    let Some(rest_start) = source.starts_with('=').then_some(1) else {
        return Err(FormulaError::Syntax {
            position: 0,
            expected: expected(&["'='"]),
        });
    };
    let tokens = Lexer::tokens(source, rest_start)?;
    let mut parser = Parser { tokens, idx: 0 };
    let expr = parser.expr()?;
    if *parser.peek() != Token::Eof {
        return parser.fail(&["operator", "end of formula"]);
    }
    Ok(expr)
}
