//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := atom ('^' exponent)?
//! exponent := integer | '(' ('-' | '+')? integer ')' | '-' integer
//! atom     := number | 'x' | 'y' | 'z' | func '(' expr ')' | '(' expr ')'
//! func     := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;

use num_rational::BigRational;

use super::eval::parse_decimal;
use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    UnknownIdentifier(String),
    BadNumber(String),
    DivisionByZero,
    NonIntegerExponent,
    ExponentOutOfRange,
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "unexpected character `{c}` at byte {}", self.offset)
            }
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input at byte {}", self.offset),
            ParseErrorKind::Expected(what) => write!(f, "expected {what} at byte {}", self.offset),
            ParseErrorKind::UnknownIdentifier(id) => {
                write!(f, "unknown identifier `{id}` at byte {}", self.offset)
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}` at byte {}", self.offset),
            ParseErrorKind::DivisionByZero => write!(f, "division by zero at byte {}", self.offset),
            ParseErrorKind::NonIntegerExponent => {
                write!(f, "exponent must be an integer literal at byte {}", self.offset)
            }
            ParseErrorKind::ExponentOutOfRange => write!(f, "exponent out of range at byte {}", self.offset),
        }
    }
}

/// Parses an expression in `x, y, z`.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(ParseError { kind: ParseErrorKind::Empty, offset: 0 });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err_here_char());
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, kind: ParseErrorKind, offset: usize) -> ParseError {
        ParseError { kind, offset }
    }

    fn err_here_char(&self) -> ParseError {
        match std::str::from_utf8(&self.src[self.pos..]).ok().and_then(|s| s.chars().next()) {
            Some(c) => self.err(ParseErrorKind::UnexpectedChar(c), self.pos),
            None => self.err(ParseErrorKind::UnexpectedEnd, self.pos),
        }
    }

    fn expect(&mut self, c: u8, what: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            None => Err(self.err(ParseErrorKind::UnexpectedEnd, self.pos)),
            Some(_) => Err(self.err(ParseErrorKind::Expected(what), self.pos)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    factors.push(self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(self.err(ParseErrorKind::DivisionByZero, at));
                    }
                    factors.push(Expr::pow(d, -1));
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::product(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::neg(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.exponent()?;
            if base.is_zero() && n < 0 {
                return Err(self.err(ParseErrorKind::DivisionByZero, self.pos));
            }
            return Ok(Expr::pow(base, n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let neg = match self.peek() {
                    Some(b'-') => {
                        self.pos += 1;
                        true
                    }
                    Some(b'+') => {
                        self.pos += 1;
                        false
                    }
                    _ => false,
                };
                let n = self.integer_literal(neg)?;
                self.expect(b')', "`)`")?;
                Ok(n)
            }
            Some(b'-') => {
                self.pos += 1;
                self.integer_literal(true)
            }
            Some(c) if c.is_ascii_digit() => self.integer_literal(false),
            None => Err(self.err(ParseErrorKind::UnexpectedEnd, self.pos)),
            Some(_) => Err(self.err(ParseErrorKind::NonIntegerExponent, self.pos)),
        }
    }

    fn integer_literal(&mut self, neg: bool) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let (text, end) = self.scan_number();
        if text.is_empty() {
            return Err(self.err(ParseErrorKind::NonIntegerExponent, start));
        }
        if !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(ParseErrorKind::NonIntegerExponent, start));
        }
        self.pos = end;
        let v: i64 = text
            .parse()
            .map_err(|_| self.err(ParseErrorKind::ExponentOutOfRange, start))?;
        let v = if neg { -v } else { v };
        i32::try_from(v)
            .ok()
            .filter(|v| v.unsigned_abs() <= 10_000)
            .ok_or_else(|| self.err(ParseErrorKind::ExponentOutOfRange, start))
    }

    /// Scans a numeric literal starting at `pos` without consuming it.
    fn scan_number(&self) -> (String, usize) {
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') && i > self.pos {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        (String::from_utf8_lossy(&s[self.pos..i]).into_owned(), i)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let c = match self.peek() {
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd, self.pos)),
            Some(c) => c,
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')', "`)`")?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            let (text, end) = self.scan_number();
            let value: BigRational = parse_decimal(&text)
                .ok_or_else(|| self.err(ParseErrorKind::BadNumber(text.clone()), start))?;
            self.pos = end;
            return Ok(Expr::constant(value));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            let mut i = self.pos;
            while i < self.src.len() && (self.src[i].is_ascii_alphanumeric() || self.src[i] == b'_') {
                i += 1;
            }
            let ident = std::str::from_utf8(&self.src[start..i]).unwrap_or("").to_string();
            self.pos = i;
            return match ident.as_str() {
                "x" => Ok(Expr::x()),
                "y" => Ok(Expr::y()),
                "z" => Ok(Expr::z()),
                "sin" | "cos" | "exp" => {
                    self.expect(b'(', "`(`")?;
                    let arg = self.expr()?;
                    self.expect(b')', "`)`")?;
                    Ok(match ident.as_str() {
                        "sin" => Expr::sin(arg),
                        "cos" => Expr::cos(arg),
                        _ => Expr::exp(arg),
                    })
                }
                _ => Err(self.err(ParseErrorKind::UnknownIdentifier(ident), start)),
            };
        }
        Err(self.err_here_char())
    }
}
