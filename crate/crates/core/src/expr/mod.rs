//! Scalar expression trees over `n` real variables.
//!
//! Expressions are built from constants, variables, the four arithmetic
//! operations, negation and powers with rational exponents. Differentiation
//! is symbolic and closed: the partial derivative of an [`Expr`] is again an
//! [`Expr`]. The only simplification performed is constant folding (which
//! includes dropping additive zeros, multiplicative ones and annihilating
//! products with a zero factor).

mod infix;
mod json;

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

pub use infix::parse_infix;
pub use json::{expr_from_value, expr_to_value, parse_json, to_json};

/// Rational exponent, always in lowest terms with a positive denominator.
pub type Exponent = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable x{index} is out of range for a point of dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },
}

impl ExprError {
    pub(crate) fn parse(position: impl Into<String>, message: impl Into<String>) -> Self {
        ExprError::Parse {
            position: position.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Exponent),
}

fn is_integer(q: Exponent) -> bool {
    *q.denom() == 1
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Sum with constant folding.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut acc = 0.0;
        let mut rest = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                Expr::Const(c) => acc += c,
                Expr::Add(inner) => {
                    for s in inner {
                        match s {
                            Expr::Const(c) => acc += c,
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        if acc != 0.0 || rest.is_empty() {
            rest.push(Expr::Const(acc));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::Add(rest)
        }
    }

    /// Product with constant folding; a zero factor annihilates the product.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut acc = 1.0;
        let mut rest = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                Expr::Const(c) => acc *= c,
                Expr::Mul(inner) => {
                    for g in inner {
                        match g {
                            Expr::Const(c) => acc *= c,
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        if acc == 0.0 {
            return Expr::Const(0.0);
        }
        if acc != 1.0 || rest.is_empty() {
            rest.insert(0, Expr::Const(acc));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::Mul(rest)
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            (a, Expr::Const(y)) if y == 0.0 => a,
            (Expr::Const(x), b) if x == 0.0 => Expr::neg(b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) if y != 0.0 => Expr::Const(x / y),
            (a, Expr::Const(y)) if y == 1.0 => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(base: Expr, q: Exponent) -> Expr {
        if *q.numer() == 0 {
            return Expr::Const(1.0);
        }
        if q == Exponent::from_integer(1) {
            return base;
        }
        if let Expr::Const(c) = base {
            if let Ok(v) = pow_value(c, q) {
                return Expr::Const(v);
            }
        }
        Expr::Pow(Box::new(base), q)
    }

    /// Raw power node without folding; used by parsers so that the tree
    /// mirrors its textual form exactly.
    pub(crate) fn pow_raw(base: Expr, q: Exponent) -> Expr {
        Expr::Pow(Box::new(base), q)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(v) | Expr::Mul(v) => v.iter().filter_map(Expr::max_var).max(),
            Expr::Sub(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_var(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Add(v) | Expr::Mul(v) => v.iter().map(Expr::size).sum(),
            Expr::Sub(a, b) | Expr::Div(a, b) => a.size() + b.size(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.size(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(ExprError::VariableOutOfRange {
                index: *i,
                dim: x.len(),
            })?,
            Expr::Add(v) => {
                let mut s = 0.0;
                for t in v {
                    s += t.eval(x)?;
                }
                s
            }
            Expr::Mul(v) => {
                let mut p = 1.0;
                for t in v {
                    p *= t.eval(x)?;
                }
                p
            }
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                num / den
            }
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Pow(b, q) => pow_value(b.eval(x)?, *q)?,
        })
    }

    /// Smallest base value among fractional-power nodes at `x`, or `+inf`
    /// when the expression has none. Derivatives are only defined where this
    /// is strictly positive.
    pub fn min_fractional_base(&self, x: &[f64]) -> Result<f64, ExprError> {
        let mut m = f64::INFINITY;
        self.visit_fractional_bases(x, &mut m)?;
        Ok(m)
    }

    fn visit_fractional_bases(&self, x: &[f64], m: &mut f64) -> Result<(), ExprError> {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Add(v) | Expr::Mul(v) => {
                for t in v {
                    t.visit_fractional_bases(x, m)?;
                }
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.visit_fractional_bases(x, m)?;
                b.visit_fractional_bases(x, m)?;
            }
            Expr::Neg(a) => a.visit_fractional_bases(x, m)?,
            Expr::Pow(b, q) => {
                b.visit_fractional_bases(x, m)?;
                if !is_integer(*q) {
                    *m = m.min(b.eval(x)?);
                }
            }
        }
        Ok(())
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn differentiate(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(v) => Expr::add(v.iter().map(|t| t.differentiate(i)).collect()),
            Expr::Sub(a, b) => Expr::sub(a.differentiate(i), b.differentiate(i)),
            Expr::Mul(v) => {
                let mut terms = Vec::with_capacity(v.len());
                for k in 0..v.len() {
                    let dk = v[k].differentiate(i);
                    if dk == Expr::Const(0.0) {
                        continue;
                    }
                    let mut factors: Vec<Expr> = v
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .map(|(_, e)| e.clone())
                        .collect();
                    factors.push(dk);
                    terms.push(Expr::mul(factors));
                }
                Expr::add(terms)
            }
            Expr::Div(a, b) => {
                let da = a.differentiate(i);
                let db = b.differentiate(i);
                if db == Expr::Const(0.0) {
                    return Expr::div(da, (**b).clone());
                }
                let numer = Expr::sub(
                    Expr::mul(vec![da, (**b).clone()]),
                    Expr::mul(vec![(**a).clone(), db]),
                );
                Expr::div(numer, Expr::pow((**b).clone(), Exponent::from_integer(2)))
            }
            Expr::Neg(a) => Expr::neg(a.differentiate(i)),
            Expr::Pow(b, q) => {
                let db = b.differentiate(i);
                if db == Expr::Const(0.0) {
                    return Expr::Const(0.0);
                }
                let coeff = Expr::Const(*q.numer() as f64 / *q.denom() as f64);
                let lowered = Expr::pow((**b).clone(), *q - 1);
                Expr::mul(vec![coeff, lowered, db])
            }
        }
    }
}

/// `base^q` with the domain rules of the expression language.
pub fn pow_value(base: f64, q: Exponent) -> Result<f64, ExprError> {
    let (p, r) = (*q.numer(), *q.denom());
    if r == 1 {
        if base == 0.0 && p < 0 {
            return Err(ExprError::Domain(format!("0^{p}")));
        }
        return Ok(match i32::try_from(p) {
            Ok(p) => base.powi(p),
            Err(_) => base.powf(p as f64),
        });
    }
    if base < 0.0 {
        return Err(ExprError::Domain(format!(
            "negative base {base} with fractional exponent {p}/{r}"
        )));
    }
    if base == 0.0 {
        if p < 0 {
            return Err(ExprError::Domain(format!("0^({p}/{r})")));
        }
        return Ok(0.0);
    }
    if r == 2 {
        // sqrt is correctly rounded; keeps sqrt(4) == 2 exactly
        return pow_value(base.sqrt(), Exponent::from_integer(p));
    }
    Ok(base.powf(p as f64 / r as f64))
}

/// Parse an exponent written as `p/q`, an integer, or a short decimal.
pub fn parse_exponent_text(s: &str) -> Result<Exponent, ExprError> {
    if s.contains('.') {
        infix::decimal_exponent(s.trim(), "")
    } else {
        json::parse_exponent(s, "")
    }
}

/// An expression together with its symbolic gradient and Hessian.
#[derive(Debug, Clone)]
pub struct SmoothFn {
    expr: Expr,
    n: usize,
    grad: Vec<Expr>,
    // upper triangle, row-major: hess[i][j - i] = d2/dxi dxj for j >= i
    hess: Vec<Vec<Expr>>,
}

impl SmoothFn {
    pub fn new(expr: Expr, n: usize) -> Result<Self, ExprError> {
        if let Some(m) = expr.max_var() {
            if m >= n {
                return Err(ExprError::VariableOutOfRange { index: m, dim: n });
            }
        }
        let grad: Vec<Expr> = (0..n).map(|i| expr.differentiate(i)).collect();
        let hess = (0..n)
            .map(|i| (i..n).map(|j| grad[i].differentiate(j)).collect())
            .collect();
        Ok(SmoothFn {
            expr,
            n,
            grad,
            hess,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn partial(&self, i: usize) -> &Expr {
        &self.grad[i]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.expr.eval(x)
    }

    fn require_interior(&self, x: &[f64]) -> Result<(), ExprError> {
        let m = self.expr.min_fractional_base(x)?;
        if m <= 0.0 {
            return Err(ExprError::Domain(format!(
                "derivative requested on the boundary of a fractional-power domain (base {m})"
            )));
        }
        Ok(())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.require_interior(x)?;
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ExprError> {
        self.require_interior(x)?;
        let mut h = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.hess[i][j - i].eval(x)?;
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        Ok(h)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        infix::write_infix(self, f)
    }
}
