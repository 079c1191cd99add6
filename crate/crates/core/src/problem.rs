//! Problem description and its JSON file format.
//!
//! ```text
//! {
//!   "name": "...",                          optional
//!   "n": 2,
//!   "alpha": "5/2" | 2.5,
//!   "objective": ExprTree,
//!   "asymptotic": ExprTree,                 optional, the declared f∞
//!   "alternates": [ExprTree, ...],          optional
//!   "ambient": {"generators": [[..], ..]},
//!   "constraints": {"pieces": [{"linear": {"A": [[..]], "b": [..]}, "smooth": [ExprTree]}]},
//!   "asymptotic_cone": {"cones": [{"generators": [[..]]} | {"halfspaces": [[..]]}]},  optional
//!   "convex": true,
//!   "rho": 0.0,                             optional
//!   "feasible_start": [..],
//!   "seed": 0                               optional
//! }
//! ```
//!
//! An `ExprTree` may also be given as an infix string such as
//! `"x1*x2 + sqrt(x1)"`. Errors carry the JSON pointer of the offending
//! node.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::{expr_from_value, parse_infix, Exponent, Expr, ExprError, SmoothFn};
use crate::geometry::{ConeUnion, LinearSystem, Piece, PolyhedralCone, SetDescription};

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: Option<String>,
    pub n: usize,
    pub alpha: f64,
    /// `alpha` as written in the input, e.g. `"5/2"`.
    pub alpha_text: String,
    pub objective: SmoothFn,
    pub asymptotic: Option<SmoothFn>,
    pub alternates: Vec<SmoothFn>,
    pub set: SetDescription,
    /// Inflation margin of `K` approximating the open set `U ⊃ K`.
    pub rho: f64,
    pub feasible_start: Option<Vec<f64>>,
    pub seed: u64,
}

const KNOWN_KEYS: [&str; 13] = [
    "name",
    "n",
    "alpha",
    "objective",
    "asymptotic",
    "alternates",
    "ambient",
    "constraints",
    "asymptotic_cone",
    "convex",
    "rho",
    "feasible_start",
    "seed",
];

fn expr_error(e: ExprError, at: &str) -> Error {
    match e {
        ExprError::Parse { position, message } if position.starts_with('/') || position.is_empty() => {
            Error::schema(position, message)
        }
        ExprError::Parse { position, message } => Error::schema(at, format!("{message} ({position})")),
        other => Error::schema(at, other.to_string()),
    }
}

/// Decode an expression given either as a tree or as infix text.
pub fn expr_at(v: &Value, at: &str) -> Result<Expr> {
    match v {
        Value::String(s) => parse_infix(s).map_err(|e| expr_error(e, at)),
        other => expr_from_value(other, at).map_err(|e| expr_error(e, at)),
    }
}

fn smooth_at(v: &Value, n: usize, at: &str) -> Result<SmoothFn> {
    SmoothFn::new(expr_at(v, at)?, n).map_err(|e| expr_error(e, at))
}

fn vector_at(v: &Value, len: Option<usize>, at: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::schema(at, "expected an array of numbers"))?;
    let out = arr
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.as_f64()
                .filter(|c| c.is_finite())
                .ok_or_else(|| Error::schema(format!("{at}/{i}"), "expected a finite number"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(l) = len {
        if out.len() != l {
            return Err(Error::schema(at, format!("expected {l} entries, found {}", out.len())));
        }
    }
    Ok(out)
}

fn matrix_at(v: &Value, cols: usize, at: &str) -> Result<Vec<Vec<f64>>> {
    let arr = v.as_array().ok_or_else(|| Error::schema(at, "expected an array of rows"))?;
    arr.iter()
        .enumerate()
        .map(|(i, r)| vector_at(r, Some(cols), &format!("{at}/{i}")))
        .collect()
}

/// Parse `"p/q"`, an integer string, or a JSON number.
pub fn parse_alpha(v: &Value, at: &str) -> Result<(f64, String)> {
    let (value, text) = match v {
        Value::String(s) => {
            let q: Exponent = crate::expr::parse_exponent_text(s).map_err(|e| expr_error(e, at))?;
            (*q.numer() as f64 / *q.denom() as f64, s.trim().to_string())
        }
        Value::Number(x) => {
            let f = x.as_f64().ok_or_else(|| Error::schema(at, "expected a number"))?;
            (f, x.to_string())
        }
        _ => return Err(Error::schema(at, "expected a rational string like \"5/2\" or a number")),
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::schema(at, "alpha must be positive"));
    }
    Ok((value, text))
}

fn cone_at(v: &Value, n: usize, at: &str) -> Result<PolyhedralCone> {
    let obj = v.as_object().ok_or_else(|| Error::schema(at, "expected a cone object"))?;
    let cone = match (obj.get("generators"), obj.get("halfspaces")) {
        (Some(g), None) => PolyhedralCone::from_generators(n, matrix_at(g, n, &format!("{at}/generators"))?),
        (None, Some(h)) => PolyhedralCone::from_halfspaces(n, matrix_at(h, n, &format!("{at}/halfspaces"))?),
        _ => return Err(Error::schema(at, "expected exactly one of generators or halfspaces")),
    };
    cone.map_err(|e| Error::schema(at, e.to_string()))
}

fn piece_at(v: &Value, n: usize, at: &str) -> Result<Piece> {
    let obj = v.as_object().ok_or_else(|| Error::schema(at, "expected a piece object"))?;
    for k in obj.keys() {
        if k != "linear" && k != "smooth" {
            return Err(Error::schema(format!("{at}/{k}"), "unknown key"));
        }
    }
    let linear = match obj.get("linear") {
        None => None,
        Some(l) => {
            let lat = format!("{at}/linear");
            let lo = l.as_object().ok_or_else(|| Error::schema(&lat, "expected {\"A\": .., \"b\": ..}"))?;
            let a_v = lo.get("A").ok_or_else(|| Error::schema(format!("{lat}/A"), "missing"))?;
            let b_v = lo.get("b").ok_or_else(|| Error::schema(format!("{lat}/b"), "missing"))?;
            let a = matrix_at(a_v, n, &format!("{lat}/A"))?;
            let b = vector_at(b_v, Some(a.len()), &format!("{lat}/b"))?;
            Some(LinearSystem { a, b })
        }
    };
    let smooth = match obj.get("smooth") {
        None => Vec::new(),
        Some(s) => {
            let sat = format!("{at}/smooth");
            let arr = s.as_array().ok_or_else(|| Error::schema(&sat, "expected an array"))?;
            arr.iter()
                .enumerate()
                .map(|(i, e)| {
                    let eat = format!("{sat}/{i}");
                    let e = expr_at(e, &eat)?;
                    if e.max_var().is_some_and(|m| m >= n) {
                        return Err(Error::schema(eat, format!("variable index out of range for n = {n}")));
                    }
                    Ok(e)
                })
                .collect::<Result<Vec<Expr>>>()?
        }
    };
    Ok(Piece { linear, smooth })
}

fn object_get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::schema(format!("/{key}"), "missing required key"))
}

impl ProblemSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| {
            Error::schema("", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::schema("", "expected a JSON object"))?;
        for k in obj.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::schema(format!("/{k}"), "unknown key"));
            }
        }
        let n = object_get(obj, "n")?
            .as_u64()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::schema("/n", "expected a positive integer"))? as usize;
        let (alpha, alpha_text) = parse_alpha(object_get(obj, "alpha")?, "/alpha")?;
        let objective = smooth_at(object_get(obj, "objective")?, n, "/objective")?;
        let asymptotic = obj
            .get("asymptotic")
            .map(|h| smooth_at(h, n, "/asymptotic"))
            .transpose()?;
        let alternates = match obj.get("alternates") {
            None => Vec::new(),
            Some(a) => a
                .as_array()
                .ok_or_else(|| Error::schema("/alternates", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, e)| smooth_at(e, n, &format!("/alternates/{i}")))
                .collect::<Result<Vec<_>>>()?,
        };
        let ambient_v = object_get(obj, "ambient")?;
        let ambient = cone_at(ambient_v, n, "/ambient")?;
        let constraints = object_get(obj, "constraints")?
            .as_object()
            .ok_or_else(|| Error::schema("/constraints", "expected an object"))?;
        let pieces_v = constraints
            .get("pieces")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::schema("/constraints/pieces", "expected an array of pieces"))?;
        if pieces_v.is_empty() {
            return Err(Error::schema("/constraints/pieces", "at least one piece is required"));
        }
        let pieces = pieces_v
            .iter()
            .enumerate()
            .map(|(i, p)| piece_at(p, n, &format!("/constraints/pieces/{i}")))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in pieces.iter().enumerate() {
            if p.linear.as_ref().is_none_or(|l| l.a.is_empty()) && p.smooth.is_empty() {
                return Err(Error::schema(format!("/constraints/pieces/{i}"), "a piece needs at least one constraint"));
            }
        }
        let declared = match obj.get("asymptotic_cone") {
            None => None,
            Some(c) => {
                let cones_v = c
                    .get("cones")
                    .and_then(Value::as_array)
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| Error::schema("/asymptotic_cone/cones", "expected a nonempty array"))?;
                let cones = cones_v
                    .iter()
                    .enumerate()
                    .map(|(i, c)| cone_at(c, n, &format!("/asymptotic_cone/cones/{i}")))
                    .collect::<Result<Vec<_>>>()?;
                Some(ConeUnion { cones })
            }
        };
        let convex = match obj.get("convex") {
            None => false,
            Some(c) => c.as_bool().ok_or_else(|| Error::schema("/convex", "expected a boolean"))?,
        };
        let rho = match obj.get("rho") {
            None => 0.0,
            Some(r) => r
                .as_f64()
                .filter(|r| r.is_finite() && *r >= 0.0)
                .ok_or_else(|| Error::schema("/rho", "expected a non-negative number"))?,
        };
        let feasible_start = obj
            .get("feasible_start")
            .map(|s| vector_at(s, Some(n), "/feasible_start"))
            .transpose()?;
        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().ok_or_else(|| Error::schema("/seed", "expected a non-negative integer"))?,
        };
        let name = obj.get("name").and_then(Value::as_str).map(str::to_string);
        let set = SetDescription::new(n, pieces, ambient, declared, convex)
            .map_err(|e| Error::schema("/constraints", e.to_string()))?;
        if let Some(x) = &feasible_start {
            if !set.contains(x) {
                return Err(Error::schema("/feasible_start", "the feasible start is not in the constraint set"));
            }
        }
        Ok(ProblemSpec {
            name,
            n,
            alpha,
            alpha_text,
            objective,
            asymptotic,
            alternates,
            set,
            rho,
            feasible_start,
            seed,
        })
    }

    /// The declared asymptotic function, or an error when absent.
    pub fn asymptotic_fn(&self) -> Result<&SmoothFn> {
        self.asymptotic
            .as_ref()
            .ok_or_else(|| Error::Precondition("the problem declares no asymptotic function".into()))
    }

    /// `f_u(x) = f(x) - <u, x>`.
    pub fn shifted_objective(&self, u: &[f64]) -> Result<SmoothFn> {
        if u.len() != self.n {
            return Err(Error::Precondition(format!("u has {} entries, expected {}", u.len(), self.n)));
        }
        if u.iter().all(|&c| c == 0.0) {
            return Ok(self.objective.clone());
        }
        let mut terms = vec![self.objective.expr().clone()];
        for (i, &c) in u.iter().enumerate() {
            if c != 0.0 {
                terms.push(Expr::mul(vec![Expr::constant(-c), Expr::var(i)]));
            }
        }
        Ok(SmoothFn::new(Expr::add(terms), self.n)?)
    }

    /// Replace the asymptotic function and degree, e.g. to examine an
    /// alternate asymptotic function.
    pub fn with_asymptotic(&self, h: Expr, alpha: f64, alpha_text: String) -> Result<Self> {
        let mut p = self.clone();
        p.asymptotic = Some(SmoothFn::new(h, self.n)?);
        p.alpha = alpha;
        p.alpha_text = alpha_text;
        Ok(p)
    }

    /// The sampling generator for this problem, optionally reseeded.
    pub fn rng(&self, seed: Option<u64>) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed.unwrap_or(self.seed))
    }

    pub fn require_parametric_degree(&self) -> Result<()> {
        if self.alpha <= 1.0 {
            return Err(Error::DegreeTooSmall { alpha: self.alpha });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX2: &str = r#"{
        "n": 2, "alpha": "5/2",
        "objective": "x2^(5/2) + 0.5*x1^2 - x1*x2",
        "asymptotic": {"op":"pow","base":{"var":1},"exp":"5/2"},
        "ambient": {"generators": [[1,0],[0,1]]},
        "constraints": {"pieces": [{"linear": {"A": [[0,-1]], "b": [-16]}, "smooth": ["2 - x1*x2"]}]},
        "asymptotic_cone": {"cones": [{"generators": [[1,0],[0,1]]}]},
        "convex": true,
        "feasible_start": [17, 16]
    }"#;

    #[test]
    fn parses_second_example() {
        let p = ProblemSpec::from_json_str(EX2).unwrap();
        assert_eq!(p.alpha, 2.5);
        assert_eq!(p.alpha_text, "5/2");
        assert_eq!(p.objective.eval(&[16.0, 16.0]).unwrap(), 896.0);
        assert!(p.set.contains(&[17.0, 16.0]));
        assert!(p.set.convex);
        let fu = p.shifted_objective(&[1.0, 0.0]).unwrap();
        assert_eq!(fu.eval(&[17.0, 16.0]).unwrap(), 879.5);
    }

    fn pointer_of(text: &str) -> String {
        match ProblemSpec::from_json_str(text).unwrap_err() {
            Error::Schema { pointer, .. } => pointer,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_point_at_the_offending_node() {
        let bad_exp = EX2.replace(r#""exp":"5/2""#, r#""exp":"1/0""#);
        assert_eq!(pointer_of(&bad_exp), "/asymptotic/exp");
        let bad_b = EX2.replace(r#""b": [-16]"#, r#""b": ["x"]"#);
        assert_eq!(pointer_of(&bad_b), "/constraints/pieces/0/linear/b/0");
        let bad_key = EX2.replace(r#""convex""#, r#""konvex""#);
        assert_eq!(pointer_of(&bad_key), "/konvex");
        let bad_start = EX2.replace("[17, 16]", "[1, 1]");
        assert_eq!(pointer_of(&bad_start), "/feasible_start");
        let bad_var = EX2.replace(r#""2 - x1*x2""#, r#""2 - x1*x3""#);
        assert_eq!(pointer_of(&bad_var), "/constraints/pieces/0/smooth/0");
    }

    #[test]
    fn degree_guard() {
        let p = ProblemSpec::from_json_str(&EX2.replace(r#""alpha": "5/2""#, r#""alpha": 0.5"#)).unwrap();
        assert_eq!(p.require_parametric_degree(), Err(Error::DegreeTooSmall { alpha: 0.5 }));
    }
}
