//! Recursive-descent parser for defining functions and vector-field
//! components.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' nonneg-integer)?
//! atom   := number | 'i' | 'z1' | 'z2' | 'zb1' | 'zb2'
//!         | 'conj(' expr ')' | 'sqrt(' expr ')' | '(' expr ')' | '-' atom
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Expr, ExprError, ExprPool, VarId, C64};

/// Failure position (byte offset into the input) and what would have been
/// accepted there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub message: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}", self.offset)?;
        if !self.expected.is_empty() {
            write!(f, ": expected one of {:?}", self.expected)?;
        }
        if let Some(m) = &self.message {
            write!(f, " ({})", m)?;
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}

struct Parser<'a, 'p> {
    src: &'a [u8],
    pos: usize,
    pool: &'p mut ExprPool,
}

const ATOM_START: &[&str] = &[
    "number", "i", "z1", "z2", "zb1", "zb2", "conj(", "sqrt(", "(", "-",
];

impl Parser<'_, '_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.pos,
            expected: expected.to_vec(),
            message: None,
        }
    }

    fn lift(&self, at: usize, e: ExprError) -> ParseError {
        ParseError {
            offset: at,
            expected: Vec::new(),
            message: Some(alloc::format!("{e}")),
        }
    }

    fn expect(&mut self, c: u8, name: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.pool.add(acc, t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.pool.sub(acc, t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let t = self.factor()?;
                    acc = self.pool.mul(acc, t);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let t = self.factor()?;
                    acc = self.pool.div(acc, t).map_err(|e| self.lift(at, e))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.err(&["nonneg-integer"]));
            }
            let digits = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let n: i32 = digits.parse().map_err(|_| ParseError {
                offset: start,
                expected: alloc::vec!["nonneg-integer"],
                message: Some(String::from("exponent out of range")),
            })?;
            return self.pool.pow(base, n).map_err(|e| self.lift(start, e));
        }
        Ok(base)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        let kw = kw.as_bytes();
        if !self.src[self.pos..].starts_with(kw) {
            return false;
        }
        // identifiers must not continue past the keyword
        let next = self.src.get(self.pos + kw.len()).copied();
        let ident_kw = kw.last().is_some_and(|c| c.is_ascii_alphanumeric());
        if ident_kw && next.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            return false;
        }
        self.pos += kw.len();
        true
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.err(ATOM_START));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'-' {
            self.pos += 1;
            let a = self.atom()?;
            return Ok(self.pool.neg(a));
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')', ")")?;
            return Ok(e);
        }
        if self.keyword("conj(") {
            let e = self.expr()?;
            self.expect(b')', ")")?;
            return Ok(self.pool.conj(e));
        }
        if self.keyword("sqrt(") {
            let e = self.expr()?;
            self.expect(b')', ")")?;
            return Ok(self.pool.sqrt(e));
        }
        for (kw, v) in [
            ("zb1", VarId::Zb1),
            ("zb2", VarId::Zb2),
            ("z1", VarId::Z1),
            ("z2", VarId::Z2),
        ] {
            if self.keyword(kw) {
                return Ok(self.pool.var(v));
            }
        }
        if self.keyword("i") {
            return Ok(self.pool.imag_unit());
        }
        Err(self.err(ATOM_START))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut seen_dot = false;
        let mut digits = 0;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                digits += 1;
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.err(&["number"]));
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let x: f64 = text.parse().map_err(|_| ParseError {
            offset: start,
            expected: alloc::vec!["number"],
            message: None,
        })?;
        Ok(self.pool.constant(C64::new(x, 0.0)))
    }
}

/// Parses `text` into `pool`.
pub fn parse(pool: &mut ExprPool, text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        pool,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err(&["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(e)
}
