//! Canonical JSON tree encoding of expressions.
//!
//! ```text
//! {"const": 1.5}
//! {"var": 0}
//! {"op": "add" | "mul", "args": [e, ...]}
//! {"op": "sub" | "div", "args": [a, b]}
//! {"op": "neg", "args": [e]}
//! {"op": "pow", "base": e, "exp": "p/q"}
//! ```
//!
//! Variables are zero-based. Exponents are strings holding an integer or a
//! fraction `p/q`; plain JSON integers are accepted on input. Parse errors
//! carry the JSON pointer of the offending node.

use serde_json::{Map, Value};

use super::{Exponent, Expr, ExprError};

pub fn parse_json(text: &str) -> Result<Expr, ExprError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ExprError::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    expr_from_value(&v, "")
}

pub fn to_json(e: &Expr) -> String {
    expr_to_value(e).to_string()
}

pub(crate) fn parse_exponent(s: &str, at: &str) -> Result<Exponent, ExprError> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = p
        .parse()
        .map_err(|_| ExprError::parse(at, format!("bad exponent numerator in {s:?}")))?;
    let q: i64 = q
        .parse()
        .map_err(|_| ExprError::parse(at, format!("bad exponent denominator in {s:?}")))?;
    if q == 0 {
        return Err(ExprError::parse(at, format!("zero denominator in exponent {s:?}")));
    }
    Ok(Exponent::new(p, q))
}

fn format_exponent(q: Exponent) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn args_of<'a>(obj: &'a Map<String, Value>, at: &str) -> Result<&'a Vec<Value>, ExprError> {
    obj.get("args")
        .and_then(Value::as_array)
        .ok_or_else(|| ExprError::parse(format!("{at}/args"), "expected an array"))
}

/// Decode an expression rooted at JSON pointer `at`.
pub fn expr_from_value(v: &Value, at: &str) -> Result<Expr, ExprError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ExprError::parse(at, "expected an object"))?;
    if let Some(c) = obj.get("const") {
        let c = c
            .as_f64()
            .filter(|c| c.is_finite())
            .ok_or_else(|| ExprError::parse(format!("{at}/const"), "expected a finite number"))?;
        return Ok(Expr::Const(c));
    }
    if let Some(i) = obj.get("var") {
        let i = i
            .as_u64()
            .ok_or_else(|| ExprError::parse(format!("{at}/var"), "expected a non-negative integer"))?;
        return Ok(Expr::Var(i as usize));
    }
    let op = obj
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| ExprError::parse(at, "expected one of const, var or op"))?;
    let children = |min: usize, max: Option<usize>| -> Result<Vec<Expr>, ExprError> {
        let args = args_of(obj, at)?;
        if args.len() < min || max.is_some_and(|m| args.len() > m) {
            return Err(ExprError::parse(
                format!("{at}/args"),
                format!("wrong number of arguments for {op}: {}", args.len()),
            ));
        }
        args.iter()
            .enumerate()
            .map(|(k, a)| expr_from_value(a, &format!("{at}/args/{k}")))
            .collect()
    };
    Ok(match op {
        "add" => Expr::Add(children(1, None)?),
        "mul" => Expr::Mul(children(1, None)?),
        "sub" | "div" => {
            let mut c = children(2, Some(2))?;
            let b = Box::new(c.pop().unwrap());
            let a = Box::new(c.pop().unwrap());
            if op == "sub" {
                Expr::Sub(a, b)
            } else {
                Expr::Div(a, b)
            }
        }
        "neg" => Expr::Neg(Box::new(children(1, Some(1))?.pop().unwrap())),
        "pow" => {
            let base = obj
                .get("base")
                .ok_or_else(|| ExprError::parse(format!("{at}/base"), "missing base"))?;
            let base = expr_from_value(base, &format!("{at}/base"))?;
            let exp_at = format!("{at}/exp");
            let q = match obj.get("exp") {
                Some(Value::String(s)) => parse_exponent(s, &exp_at)?,
                Some(Value::Number(n)) if n.is_i64() => Exponent::from_integer(n.as_i64().unwrap()),
                _ => {
                    return Err(ExprError::parse(
                        exp_at,
                        "expected a rational string like \"1/2\" or an integer",
                    ))
                }
            };
            Expr::pow_raw(base, q)
        }
        other => return Err(ExprError::parse(format!("{at}/op"), format!("unknown op {other:?}"))),
    })
}

fn number(c: f64) -> Value {
    if c.fract() == 0.0 && c.abs() < 9.0e15 {
        Value::from(c as i64)
    } else {
        Value::from(c)
    }
}

pub fn expr_to_value(e: &Expr) -> Value {
    let mut m = Map::new();
    let op_args = |m: &mut Map<String, Value>, op: &str, args: Vec<&Expr>| {
        m.insert("op".into(), Value::from(op));
        m.insert(
            "args".into(),
            Value::Array(args.into_iter().map(expr_to_value).collect()),
        );
    };
    match e {
        Expr::Const(c) => {
            m.insert("const".into(), number(*c));
        }
        Expr::Var(i) => {
            m.insert("var".into(), Value::from(*i as u64));
        }
        Expr::Add(v) => op_args(&mut m, "add", v.iter().collect()),
        Expr::Mul(v) => op_args(&mut m, "mul", v.iter().collect()),
        Expr::Sub(a, b) => op_args(&mut m, "sub", vec![a, b]),
        Expr::Div(a, b) => op_args(&mut m, "div", vec![a, b]),
        Expr::Neg(a) => op_args(&mut m, "neg", vec![a]),
        Expr::Pow(b, q) => {
            m.insert("op".into(), Value::from("pow"));
            m.insert("base".into(), expr_to_value(b));
            m.insert("exp".into(), Value::from(format_exponent(*q)));
        }
    }
    Value::Object(m)
}
