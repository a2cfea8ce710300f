//! A small scalar expression language for scenario data (coefficients,
//! forcing terms, initial values).
//!
//! Grammar: infix `+ - * / ^` with the usual precedence, unary minus,
//! parentheses, variables `x y z r phi t`, functions
//! `sin cos exp abs sqrt`, decimal and scientific literals. `+ - * /`
//! associate left, `^` associates right and binds tighter than unary
//! minus. There is no built-in constant for pi; inputs spell the literal.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
    R,
    Phi,
    T,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::R => "r",
            Var::Phi => "phi",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Abs => v.abs(),
            Func::Sqrt => v.sqrt(),
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
pub enum Ast {
    Num(f64),
    Var(Var),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// Point of evaluation in component-local coordinates plus time.
///
/// On a segment `x` is the arclength parameter centered at the midpoint
/// and `y = z = 0`; on a disc `(x, y)` are the frame coordinates, `z = 0`
/// and `(r, phi)` the matching polar coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r: f64,
    pub phi: f64,
    pub t: f64,
}

impl EvalContext {
    pub fn ambient(p: [f64; 3], t: f64) -> Self {
        EvalContext {
            x: p[0],
            y: p[1],
            z: p[2],
            r: (p[0] * p[0] + p[1] * p[1]).sqrt(),
            phi: p[1].atan2(p[0]),
            t,
        }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::Z => self.z,
            Var::R => self.r,
            Var::Phi => self.phi,
            Var::T => self.t,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at byte {offset}: found {found}, expected {}", expected.join(" | "))]
pub struct ParseError {
    pub offset: usize,
    pub found: String,
    pub expected: Vec<&'static str>,
}

/// A parsed scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Ast,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Expression, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        if p.pos == p.src.len() {
            return Err(p.error(&["expression"]));
        }
        let root = p.parse_expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error(&["operator", "end of input"]));
        }
        Ok(Expression { root })
    }

    pub fn constant(v: f64) -> Expression {
        Expression { root: Ast::Num(v) }
    }

    pub fn eval(&self, ctx: &EvalContext) -> f64 {
        eval_ast(&self.root, ctx)
    }

    /// Whether the expression references the time variable `t`.
    pub fn uses_time(&self) -> bool {
        uses_var(&self.root, Var::T)
    }

    pub fn ast(&self) -> &Ast {
        &self.root
    }
}

fn eval_ast(ast: &Ast, ctx: &EvalContext) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Var(v) => ctx.get(*v),
        Ast::Neg(a) => -eval_ast(a, ctx),
        Ast::Bin(op, a, b) => {
            let (x, y) = (eval_ast(a, ctx), eval_ast(b, ctx));
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Pow => x.powf(y),
            }
        }
        Ast::Call(f, a) => f.apply(eval_ast(a, ctx)),
    }
}

fn uses_var(ast: &Ast, var: Var) -> bool {
    match ast {
        Ast::Num(_) => false,
        Ast::Var(v) => *v == var,
        Ast::Neg(a) => uses_var(a, var),
        Ast::Bin(_, a, b) => uses_var(a, var) || uses_var(b, var),
        Ast::Call(_, a) => uses_var(a, var),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, expected: &[&'static str]) -> ParseError {
        let found = if self.pos >= self.src.len() {
            "end of input".to_string()
        } else {
            let rest = &self.src[self.pos..];
            let n = rest.len().min(8);
            format!("{:?}", String::from_utf8_lossy(&rest[..n]))
        };
        ParseError {
            offset: self.pos,
            found,
            expected: expected.to_vec(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // expr := term (('+'|'-') term)*
    fn parse_expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn parse_term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Ast::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Ast::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power
    fn parse_unary(&mut self) -> Result<Ast, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.parse_unary()?;
            Ok(Ast::Neg(Box::new(inner)))
        } else {
            self.parse_power()
        }
    }

    // power := atom ('^' unary)?   (right associative, exponent may be signed)
    fn parse_power(&mut self) -> Result<Ast, ParseError> {
        let base = self.parse_atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            let exp = self.parse_unary()?;
            Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Ast, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error(&[")"]));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_lowercase() => self.parse_ident(),
            _ => Err(self.error(&["number", "variable", "function", "("])),
        }
    }

    fn parse_number(&mut self) -> Result<Ast, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // "1e" followed by a non-digit: the 'e' was not an exponent.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Ast::Num(v)),
            Err(_) => Err(ParseError {
                offset: start,
                found: format!("{:?}", text),
                expected: vec!["numeric literal"],
            }),
        }
    }

    fn parse_ident(&mut self) -> Result<Ast, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_lowercase()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let var = match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "r" => Some(Var::R),
            "phi" => Some(Var::Phi),
            "t" => Some(Var::T),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Ast::Var(v));
        }
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        };
        if let Some(f) = func {
            self.skip_ws();
            if !self.eat(b'(') {
                return Err(self.error(&["("]));
            }
            let arg = self.parse_expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.error(&[")"]));
            }
            return Ok(Ast::Call(f, Box::new(arg)));
        }
        Err(ParseError {
            offset: start,
            found: format!("{:?}", name),
            expected: vec!["x", "y", "z", "r", "phi", "t", "sin", "cos", "exp", "abs", "sqrt"],
        })
    }
}

// Printing with minimal parentheses. Levels: Add/Sub 1, Mul/Div 2,
// Neg 3, Pow 4, atoms 5. `prec` is the minimum level printable without
// parentheses in the current slot.
fn fmt_ast(ast: &Ast, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let level = match ast {
        Ast::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Ast::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Ast::Neg(_) => 3,
        Ast::Bin(BinOp::Pow, ..) => 4,
        Ast::Num(_) | Ast::Var(_) | Ast::Call(..) => 5,
    };
    if level < prec {
        write!(f, "(")?;
        fmt_ast(ast, 0, f)?;
        return write!(f, ")");
    }
    match ast {
        Ast::Num(v) => write!(f, "{}", v),
        Ast::Var(v) => write!(f, "{}", v.name()),
        Ast::Neg(a) => {
            write!(f, "-")?;
            fmt_ast(a, 4, f)
        }
        Ast::Bin(op, a, b) => match op {
            BinOp::Add => {
                fmt_ast(a, 1, f)?;
                write!(f, " + ")?;
                fmt_ast(b, 2, f)
            }
            BinOp::Sub => {
                fmt_ast(a, 1, f)?;
                write!(f, " - ")?;
                fmt_ast(b, 2, f)
            }
            BinOp::Mul => {
                fmt_ast(a, 2, f)?;
                write!(f, "*")?;
                fmt_ast(b, 3, f)
            }
            BinOp::Div => {
                fmt_ast(a, 2, f)?;
                write!(f, "/")?;
                fmt_ast(b, 3, f)
            }
            BinOp::Pow => {
                fmt_ast(a, 5, f)?;
                write!(f, "^")?;
                fmt_ast(b, 3, f)
            }
        },
        Ast::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            fmt_ast(a, 0, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ast(&self.root, 0, f)
    }
}

impl Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expression::parse(&text).map_err(serde::de::Error::custom)
    }
}
