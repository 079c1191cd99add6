//! Human-readable infix form, e.g. `x1*x2 + sqrt(x1)` or `x2^(5/2) - 0.5*x1^2`.
//!
//! Variables are written one-based (`x1` is variable index 0), matching the
//! usual mathematical convention; the JSON tree encoding stays zero-based.

use std::fmt;

use super::json::parse_exponent;
use super::{Exponent, Expr, ExprError};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) | Expr::Sub(..) => PREC_SUM,
        Expr::Mul(_) | Expr::Div(..) => PREC_PRODUCT,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Const(c) if *c < 0.0 => PREC_UNARY,
        Expr::Pow(..) => 4,
        Expr::Const(_) | Expr::Var(_) => PREC_ATOM,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_node(e, f)?;
        write!(f, ")")
    } else {
        write_node(e, f)
    }
}

fn write_node(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var(i) => write!(f, "x{}", i + 1),
        Expr::Add(v) => {
            for (k, t) in v.iter().enumerate() {
                if k == 0 {
                    write_at(t, PREC_SUM, f)?;
                    continue;
                }
                match t {
                    Expr::Neg(inner) => {
                        write!(f, " - ")?;
                        write_at(inner, PREC_PRODUCT, f)?;
                    }
                    Expr::Const(c) if *c < 0.0 => write!(f, " - {}", -c)?,
                    _ => {
                        write!(f, " + ")?;
                        write_at(t, PREC_SUM, f)?;
                    }
                }
            }
            Ok(())
        }
        Expr::Sub(a, b) => {
            write_at(a, PREC_SUM, f)?;
            write!(f, " - ")?;
            write_at(b, PREC_PRODUCT, f)
        }
        Expr::Mul(v) => {
            for (k, t) in v.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                write_at(t, PREC_PRODUCT, f)?;
            }
            Ok(())
        }
        Expr::Div(a, b) => {
            write_at(a, PREC_PRODUCT, f)?;
            write!(f, "/")?;
            write_at(b, PREC_UNARY, f)
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_at(a, PREC_UNARY, f)
        }
        Expr::Pow(b, q) => {
            write_at(b, PREC_ATOM, f)?;
            if *q.denom() == 1 && *q.numer() >= 0 {
                write!(f, "^{}", q.numer())
            } else if *q.denom() == 1 {
                write!(f, "^({})", q.numer())
            } else {
                write!(f, "^({}/{})", q.numer(), q.denom())
            }
        }
    }
}

pub(super) fn write_infix(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write_node(e, f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Parse an infix expression. Positions in errors are byte offsets.
pub fn parse_infix(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::parse(format!("offset {}", self.pos), msg)
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        let mut open_sum = false;
        loop {
            if self.eat(b'+') {
                let t = self.term()?;
                acc = match acc {
                    Expr::Add(mut v) if open_sum => {
                        v.push(t);
                        Expr::Add(v)
                    }
                    other => Expr::Add(vec![other, t]),
                };
                open_sum = true;
            } else if self.eat(b'-') {
                let t = self.term()?;
                acc = Expr::Sub(Box::new(acc), Box::new(t));
                open_sum = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        let mut open_product = false;
        loop {
            if self.eat(b'*') {
                let t = self.unary()?;
                acc = match acc {
                    Expr::Mul(mut v) if open_product => {
                        v.push(t);
                        Expr::Mul(v)
                    }
                    other => Expr::Mul(vec![other, t]),
                };
                open_product = true;
            } else if self.eat(b'/') {
                let t = self.unary()?;
                acc = Expr::Div(Box::new(acc), Box::new(t));
                open_product = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let q = self.exponent()?;
            return Ok(Expr::pow_raw(base, q));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Exponent, ExprError> {
        let at = format!("offset {}", self.pos);
        if self.eat(b'(') {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos] != b')' {
                self.pos += 1;
            }
            let inner = std::str::from_utf8(&self.src[start..self.pos]).unwrap().trim().to_string();
            self.expect(b')')?;
            if inner.contains('.') {
                return decimal_exponent(&inner, &at);
            }
            return parse_exponent(&inner, &at);
        }
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if s.is_empty() || s == "-" {
            return Err(self.err("expected an exponent"));
        }
        if s.contains('.') {
            decimal_exponent(s, &at)
        } else {
            parse_exponent(s, &at)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let k: usize = digits.parse().map_err(|_| self.err("expected a variable number after 'x'"))?;
                if k == 0 {
                    return Err(self.err("variables are numbered from x1"));
                }
                Ok(Expr::Var(k - 1))
            }
            Some(b's') if self.src[self.pos..].starts_with(b"sqrt") => {
                self.pos += 4;
                self.expect(b'(')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::pow_raw(e, Exponent::new(1, 2)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign = (c == b'+' || c == b'-')
                        && matches!(self.src.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = s.parse().map_err(|_| self.err(&format!("bad number {s:?}")))?;
                Ok(Expr::Const(v))
            }
            _ => Err(self.err("expected a number, variable, sqrt(...) or '('")),
        }
    }
}

pub(super) fn decimal_exponent(s: &str, at: &str) -> Result<Exponent, ExprError> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if frac.len() > 9 || int.len() > 9 || (int.is_empty() && frac.is_empty()) {
        return Err(ExprError::parse(at, format!("unsupported exponent {s:?}")));
    }
    let digits = format!("{int}{frac}");
    let numer: i64 = digits
        .parse()
        .map_err(|_| ExprError::parse(at, format!("bad exponent {s:?}")))?;
    let denom = 10i64.pow(frac.len() as u32);
    Ok(Exponent::new(if neg { -numer } else { numer }, denom))
}
