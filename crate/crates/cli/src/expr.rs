//! A small expression language for boundary data.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    = term (('+' | '-') term)*
//! term    = unary (('*' | '/') unary)*
//! unary   = ('-' | '+') unary | power
//! power   = primary ('^' unary)?
//! primary = number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! so `^` binds tighter than unary minus and is right associative:
//! `-2^2 = -4`, `2^3^2 = 512`. Names are the variables `x`, `y` (point
//! coordinates), `j` (hole index from 0), `t` (curve parameter), the constant
//! `pi` and the functions `sin`, `cos`, `log`, `exp`, `atan2(y, x)`,
//! `absG(x, y, ax, ay)` (Green's function at `z - a`) and `dnG(x, y, ax, ay)`
//! (its derivative along the boundary normal at the current node).

use std::fmt;

use torus_bie::green::{dot, green, green_gradient};
use torus_bie::{Complex64, Torus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    J,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Log,
    Exp,
    Atan2,
    AbsG,
    DnG,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "log" => Func::Log,
            "exp" => Func::Exp,
            "atan2" => Func::Atan2,
            "absG" => Func::AbsG,
            "dnG" => Func::DnG,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Sin | Func::Cos | Func::Log | Func::Exp => 1,
            Func::Atan2 => 2,
            Func::AbsG | Func::DnG => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: expected ", self.offset)?;
        match self.expected.as_slice() {
            [] => {}
            [one] => write!(f, "{one}")?,
            [init @ .., last] => write!(f, "{} or {last}", init.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Name(n) => format!("'{n}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["number", "name", "'('", "'-'"];

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((i, tok));
            i += 1;
        } else if b.is_ascii_whitespace() {
            i += 1;
        } else if b.is_ascii_digit() || b == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    i = k;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number"],
                found: format!("'{text}'"),
            })?;
            out.push((start, Tok::Num(value)));
        } else if b.is_ascii_alphabetic() || b == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Name(src[start..i].to_string())));
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: i,
                expected: vec!["operator", "number", "name"],
                found: format!("'{ch}'"),
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Name(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::lookup(&name).ok_or_else(|| ParseError {
                        offset: start,
                        expected: vec!["sin", "cos", "log", "exp", "atan2", "absG", "dnG"],
                        found: format!("'{name}'"),
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while args.len() < func.arity() {
                        self.expect(Tok::Comma, "','")?;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "j" => Ok(Expr::Var(Var::J)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Number(std::f64::consts::PI)),
                    _ => Err(ParseError {
                        offset: start,
                        expected: vec!["x", "y", "j", "t", "pi", "function call"],
                        found: format!("'{name}'"),
                    }),
                }
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

/// Parses a complete expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}

/// Where an expression is evaluated.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub point: Complex64,
    pub hole: usize,
    pub t: f64,
    /// Unit normal at a boundary node; `None` off the boundary.
    pub normal: Option<Complex64>,
    pub torus: &'a Torus,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("dnG needs a boundary normal and is only available for boundary data")]
    NoNormal,
    #[error(transparent)]
    Green(#[from] torus_bie::Error),
}

impl Expr {
    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Number(v) => *v,
            Expr::Var(Var::X) => env.point.re,
            Expr::Var(Var::Y) => env.point.im,
            Expr::Var(Var::J) => env.hole as f64,
            Expr::Var(Var::T) => env.t,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let v: Vec<f64> = args.iter().map(|a| a.eval(env)).collect::<Result<_, _>>()?;
                match func {
                    Func::Sin => v[0].sin(),
                    Func::Cos => v[0].cos(),
                    Func::Log => v[0].ln(),
                    Func::Exp => v[0].exp(),
                    Func::Atan2 => v[0].atan2(v[1]),
                    Func::AbsG => green(Complex64::new(v[0] - v[2], v[1] - v[3]), env.torus)?,
                    Func::DnG => {
                        let normal = env.normal.ok_or(EvalError::NoNormal)?;
                        let grad = green_gradient(Complex64::new(v[0] - v[2], v[1] - v[3]), env.torus)?;
                        dot(grad, normal)
                    }
                }
            }
        })
    }

    /// True if any subexpression satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Neg(e) => e.any(pred),
            Expr::Binary(_, a, b) => a.any(pred) || b.any(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any(pred)),
            _ => false,
        }
    }

    /// True if the value depends only on the point, so it can be evaluated off the boundary.
    pub fn is_pointwise(&self) -> bool {
        !self.any(&|e| matches!(e, Expr::Var(Var::J) | Expr::Var(Var::T) | Expr::Call(Func::DnG, _)))
    }
}
