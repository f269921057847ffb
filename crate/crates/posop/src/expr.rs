//! A tiny expression grammar for probe functions of one variable `t`:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | pow
//! pow   := atom ('^' unary)?            -- right associative
//! atom  := NUMBER | 't' | '(' expr ')' | FUNC '(' expr ')'
//! FUNC  := sin | cos | exp | abs | sqrt | log
//! ```
//!
//! Numbers are decimals with an optional exponent. Evaluation uses plain
//! real semantics; non-finite values surface later through the function
//! guard, not here.

use std::fmt;

use crate::operators::{Domain, FunctionHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Log,
}

/// Parse tree over the grammar above; the free variable is `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    Variable,
    Negate(Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Call(Builtin, Box<Expression>),
}

/// Position-annotated parse failure. Offsets are byte offsets into the
/// source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses `text` into an [`Expression`].
pub fn parse_expression(text: &str) -> Result<Expression, ParseError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(expr)
}

impl Expression {
    /// Evaluates the expression at `t` with standard real semantics.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expression::Number(v) => *v,
            Expression::Variable => t,
            Expression::Negate(inner) => -inner.eval(t),
            Expression::Binary(op, lhs, rhs) => {
                let (a, b) = (lhs.eval(t), rhs.eval(t));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => a.powf(b),
                }
            }
            Expression::Call(func, inner) => {
                let v = inner.eval(t);
                match func {
                    Builtin::Sin => v.sin(),
                    Builtin::Cos => v.cos(),
                    Builtin::Exp => v.exp(),
                    Builtin::Abs => v.abs(),
                    Builtin::Sqrt => v.sqrt(),
                    Builtin::Log => v.ln(),
                }
            }
        }
    }

    /// Wraps the expression as a guarded [`FunctionHandle`].
    pub fn into_handle(self, domain: Domain) -> FunctionHandle {
        FunctionHandle::new(domain, move |t| self.eval(t))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expression::Binary(BinaryOp::Add, Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expression::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expression::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expression::Binary(BinaryOp::Div, Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat(b'-') {
            return Ok(Expression::Negate(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expression::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            None => Err(self.error("expected an expression, found end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b) if b.is_ascii_alphabetic() => self.identifier(),
            Some(b) => Err(self.error(format!("unexpected character '{}'", b as char))),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // 'e' belonged to something else; back off
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>().map(Expression::Number).map_err(|_| ParseError {
            offset: start,
            message: format!("invalid number '{text}'"),
        })
    }

    fn identifier(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if name == "t" {
            return Ok(Expression::Variable);
        }
        let func = match name {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "exp" => Builtin::Exp,
            "abs" => Builtin::Abs,
            "sqrt" => Builtin::Sqrt,
            "log" => Builtin::Log,
            _ => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unknown identifier '{name}'"),
                })
            }
        };
        if !self.eat(b'(') {
            return Err(self.error(format!("expected '(' after '{name}'")));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.error("expected ')'"));
        }
        Ok(Expression::Call(func, Box::new(arg)))
    }
}
