//! A small expression language for data functions `h(x, t)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          // right-associative
//! atom    := number | 't' | 'x' digits | func '(' args ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2 = -4` and `2^-1 = 0.5`.
//! Variables are `x1 .. xn` (1-based) and `t`. Functions are `sin cos exp
//! log sqrt abs` (one argument) and `min max` (two arguments).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parse failure with the byte offset into the source text.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `x_k` with a zero-based index.
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Evaluates at `(x, t)`. Missing coordinates read as NaN, so an
    /// out-of-range variable surfaces as a non-finite value.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(x, t),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(x, t), r.eval(x, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, t);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x, t)),
                    Func::Max => a.max(args[1].eval(x, t)),
                }
            }
        }
    }

    /// Number of spatial coordinates the expression reads (highest `k` in `xk`).
    pub fn dimension_used(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Time => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.dimension_used(),
            Expr::Bin(_, l, r) => l.dimension_used().max(r.dimension_used()),
            Expr::Call(_, args) => args.iter().map(Expr::dimension_used).max().unwrap_or(0),
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) => e.uses_time(),
            Expr::Bin(_, l, r) => l.uses_time() || r.uses_time(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_time),
        }
    }
}

/// Printing parenthesises every compound node, so the output re-parses to
/// the same tree. Numbers use the shortest round-trip representation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Time => write!(f, "t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Source text together with its parsed tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DataExpression {
    source: String,
    tree: Expr,
}

impl DataExpression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.tree.eval(x, t)
    }
}

impl FromStr for DataExpression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_expression(s)
    }
}

impl TryFrom<String> for DataExpression {
    type Error = ParseError;
    fn try_from(s: String) -> Result<Self, ParseError> {
        parse_expression(&s)
    }
}

impl From<DataExpression> for String {
    fn from(d: DataExpression) -> String {
        d.source
    }
}

impl fmt::Display for DataExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Parses `text` into a [`DataExpression`].
pub fn parse_expression(text: &str) -> Result<DataExpression, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.syntax("empty expression"));
    }
    let tree = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(DataExpression { source: text.to_string(), tree })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(ParseError::Syntax { offset: start, message: format!("number `{text}` is not a finite double") }),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        if name == "t" {
            return Ok(Expr::Time);
        }
        if let Some(idx) = name.strip_prefix('x') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) && !idx.starts_with('0') {
                if let Ok(k) = idx.parse::<usize>() {
                    return Ok(Expr::Var(k - 1));
                }
            }
        }
        let func = Func::from_name(name)
            .ok_or_else(|| ParseError::UnknownIdentifier { offset: start, name: name.to_string() })?;
        self.expect(b'(')?;
        let mut args = vec![self.sum()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.sum()?);
        }
        if args.len() != func.arity() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("`{}` takes {} argument(s), got {}", func.name(), func.arity(), args.len()),
            });
        }
        self.expect(b')')?;
        Ok(Expr::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str, x: &[f64], t: f64) -> f64 {
        parse_expression(s).unwrap().eval(x, t)
    }

    #[test]
    fn examples() {
        let v = eval("2+sin(x1)*exp(-t)", &[std::f64::consts::FRAC_PI_2], 0.0);
        assert!((v - 3.0).abs() < 1e-15);
        assert_eq!(eval("1", &[], 0.0), 1.0);
        assert_eq!(eval("2^3^2", &[], 0.0), 512.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("-2^2", &[], 0.0), -4.0);
        assert_eq!(eval("2^-1", &[], 0.0), 0.5);
        assert_eq!(eval("1+2*3", &[], 0.0), 7.0);
        assert_eq!(eval("8/4/2", &[], 0.0), 1.0);
        assert_eq!(eval("1-2-3", &[], 0.0), -4.0);
        assert_eq!(eval("--3", &[], 0.0), 3.0);
        assert_eq!(eval("min(x1, x2) + max(1, t)", &[4.0, -1.0], 3.0), 2.0);
        assert_eq!(eval("1.5e2 + .5", &[], 0.0), 150.5);
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse_expression("1 + foo(2)").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { offset: 4, name: "foo".into() });
        assert_eq!(parse_expression("1 + * 2").unwrap_err().offset(), 4);
        assert_eq!(parse_expression("(1 + 2").unwrap_err().offset(), 6);
        assert_eq!(parse_expression("2 3").unwrap_err().offset(), 2);
        assert!(parse_expression("").is_err());
        assert!(parse_expression("   ").is_err());
        assert!(parse_expression("x0").is_err());
        assert!(parse_expression("min(1)").is_err());
        assert!(parse_expression("sin(1, 2)").is_err());
        assert!(parse_expression("1e").is_err());
    }

    #[test]
    fn round_trip_of_examples() {
        for s in ["2+sin(x1)*exp(-t)", "-2^2", "2^3^2", "min(x1,x2)/(1+t)", "1e-300*x3"] {
            let a = parse_expression(s).unwrap();
            let b = parse_expression(&a.tree().to_string()).unwrap();
            assert_eq!(a.tree(), b.tree(), "{s}");
        }
    }

    #[test]
    fn dimension_and_time_usage() {
        let e = parse_expression("x3 + sin(x1)").unwrap();
        assert_eq!(e.tree().dimension_used(), 3);
        assert!(!e.tree().uses_time());
        assert!(parse_expression("exp(-t)").unwrap().tree().uses_time());
    }
}
