//! Payoff expressions over market prices.
//!
//! Grammar, left-associative, `*` `/` over `+` `-`, unary minus tightest:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := NUMBER | "(" expr ")" | IDENT "(" expr ("," expr)* ")"
//! ```
//!
//! `IDENT` is one of `S`, `B`, `max`, `min`, `abs`. `S(i)` is the terminal
//! price of asset `i`; `S(i, n)` is its price at time `n`; `B(n)` is the bond.
//! Index arguments must be integer literals.

use std::fmt;

use obtuse_core::market::Prices;
use obtuse_core::omega::{Path, PathSpace, PathTable};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Max,
    Min,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Max => "max",
            Func::Min => "min",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `(asset, time)`, asset 1-based.
    Price(usize, usize),
    Bond(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("division by zero on path {path}")]
pub struct EvalError {
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Op(c) => write!(f, "'{c}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError {
                line,
                column,
                message: format!("malformed number '{text}'"),
            })?;
            Tok::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ParseError {
                        line,
                        column,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            }
        };
        out.push(Spanned {
            tok,
            line,
            column,
            text: chars[start..i].iter().collect(),
        });
        column += i - start;
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column,
        text: String::new(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    dim: usize,
    horizon: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, at: &Spanned, message: String) -> ParseError {
        ParseError {
            line: at.line,
            column: at.column,
            message,
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        let at = self.peek();
        self.error_at(at, format!("expected {what}, found {}", at.tok))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().tok {
            self.bump();
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().tok {
            self.bump();
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.peek().clone();
        match start.tok.clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "S" => self.price(),
                    "B" => {
                        self.expect(Tok::LParen, "'(' after B")?;
                        let n = self.index("time", 0, self.horizon)?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Expr::Bond(n))
                    }
                    "max" | "min" | "abs" => {
                        let func = match name.as_str() {
                            "max" => Func::Max,
                            "min" => Func::Min,
                            _ => Func::Abs,
                        };
                        self.call(func, &start)
                    }
                    _ => Err(self.error_at(
                        &start,
                        format!("unknown identifier '{name}'; expected one of S, B, max, min, abs"),
                    )),
                }
            }
            _ => Err(self.expected("a number, '(', '-' or identifier")),
        }
    }

    fn price(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "'(' after S")?;
        let asset = self.index("asset", 1, self.dim)?;
        let time = if self.peek().tok == Tok::Comma {
            self.bump();
            self.index("time", 0, self.horizon)?
        } else {
            self.horizon
        };
        self.expect(Tok::RParen, "',' or ')'")?;
        Ok(Expr::Price(asset, time))
    }

    fn index(&mut self, what: &str, min: usize, max: usize) -> Result<usize, ParseError> {
        let at = self.peek().clone();
        let Tok::Num(x) = at.tok else {
            return Err(self.expected(&format!("an integer {what} index")));
        };
        if x.fract() != 0.0 || at.text.contains(['.', 'e', 'E']) {
            return Err(self.error_at(
                &at,
                format!("{what} index must be an integer, found '{}'", at.text),
            ));
        }
        if x < min as f64 || x > max as f64 {
            return Err(self.error_at(&at, format!("{what} index {x} out of range [{min}, {max}]")));
        }
        self.bump();
        Ok(x as usize)
    }

    fn call(&mut self, func: Func, start: &Spanned) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, &format!("'(' after {}", func.name()))?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        let ok = match func {
            Func::Abs => args.len() == 1,
            Func::Max | Func::Min => args.len() >= 2,
        };
        if !ok {
            let want = if func == Func::Abs {
                "exactly 1"
            } else {
                "at least 2"
            };
            return Err(self.error_at(
                start,
                format!("{} takes {want} arguments, got {}", func.name(), args.len()),
            ));
        }
        Ok(Expr::Call(func, args))
    }
}

/// Parse `text` for a market with `dim` assets and last time `horizon`.
pub fn parse_payoff(text: &str, dim: usize, horizon: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        dim,
        horizon,
    };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.expected("an operator or end of input"));
    }
    Ok(e)
}

const UNARY: u8 = 3;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.precedence(),
        Expr::Neg(_) => UNARY,
        _ => UNARY + 1,
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrapped = |child: &Expr, parens: bool, f: &mut fmt::Formatter<'_>| {
        if parens {
            f.write_str("(")?;
            write_expr(child, f)?;
            f.write_str(")")
        } else {
            write_expr(child, f)
        }
    };
    match e {
        Expr::Num(x) => write!(f, "{x}"),
        Expr::Price(i, n) => write!(f, "S({i},{n})"),
        Expr::Bond(n) => write!(f, "B({n})"),
        Expr::Neg(inner) => {
            f.write_str("-")?;
            wrapped(inner, precedence(inner) < UNARY, f)
        }
        Expr::Bin(op, a, b) => {
            let p = op.precedence();
            wrapped(a, precedence(a) < p, f)?;
            write!(f, " {} ", op.symbol())?;
            wrapped(b, precedence(b) <= p, f)
        }
        Expr::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write_expr(a, f)?;
            }
            f.write_str(")")
        }
    }
}

/// Canonical text; parsing it yields the same tree. Times are always explicit.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

impl Expr {
    fn eval_at(&self, prices: &Prices, idx: usize) -> Option<f64> {
        Some(match self {
            Expr::Num(x) => *x,
            Expr::Price(i, n) => prices.stock(*n as isize, *i, idx),
            Expr::Bond(n) => prices.bond(*n as isize),
            Expr::Neg(a) => -a.eval_at(prices, idx)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_at(prices, idx)?, b.eval_at(prices, idx)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y == 0.0 => return None,
                    BinOp::Div => x / y,
                }
            }
            Expr::Call(func, args) => {
                let vals = args
                    .iter()
                    .map(|a| a.eval_at(prices, idx))
                    .collect::<Option<Vec<_>>>()?;
                match func {
                    Func::Abs => vals[0].abs(),
                    Func::Max => vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
                    Func::Min => vals.into_iter().fold(f64::INFINITY, f64::min),
                }
            }
        })
    }

    /// Pointwise value on every path of `space`.
    pub fn eval(&self, space: PathSpace, prices: &Prices) -> Result<PathTable, EvalError> {
        let values = (0..space.len())
            .map(|idx| {
                self.eval_at(prices, idx).ok_or_else(|| EvalError {
                    path: Path(space.prefix(idx, space.horizon() as isize)).to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathTable::new(space, values).expect("one value per path"))
    }
}
