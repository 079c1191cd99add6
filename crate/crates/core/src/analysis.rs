//! Numerical checks of the structural hypotheses: positive homogeneity of
//! the asymptotic function, the little-o condition along the constraint
//! set, agreement of asymptotic functions on `K∞`, pseudoconvexity,
//! convexity and boundedness from below.
//!
//! Every check is sample based and seeded; a pass is evidence, not proof.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::expr::{Expr, SmoothFn};
use crate::geometry::{realization_tolerance, sphere_rays, ConeUnion, PolyhedralCone, RaySet, SetDescription};
use crate::search::{pattern_search, PatternConfig};
use crate::vecops::{dot, norm, scale, sub};
use crate::verdict::ValidationVerdict;

pub const HOMOGENEITY_SCALES: [f64; 3] = [2.0, 10.0, 100.0];
pub const LITTLE_O_SCALES: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
pub const LOWER_BOUND_SCALES: [f64; 8] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7];
/// Ratio bound at the largest little-o scale.
pub const LITTLE_O_BOUND: f64 = 1e-3;
/// Minimum fractional-power base for derivative sampling.
pub const DOMAIN_MARGIN: f64 = 1e-3;
/// Drop of the running minimum that flags unboundedness from below.
pub const UNBOUNDED_DROP: f64 = 1e6;

/// Random points of a cone: nonnegative combinations of its generators
/// with log-uniform overall scale in `[0.1, 10]`.
pub fn cone_samples<R: Rng>(cone: &PolyhedralCone, rng: &mut R, count: usize) -> Result<Vec<Vec<f64>>> {
    let gens = cone.generators()?;
    let n = cone.dim();
    Ok((0..count)
        .map(|_| {
            let s = 10f64.powf(rng.random_range(-1.0..=1.0));
            let mut x = vec![0.0; n];
            for g in gens {
                let c: f64 = rng.random_range(0.0..1.0) * s;
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi += c * gi;
                }
            }
            x
        })
        .collect())
}

/// `|h(tx) - t^alpha h(x)| <= 1e-9 (1 + |t^alpha h(x)|)` on samples from
/// the ambient cone.
pub fn check_positive_homogeneity<R: Rng>(
    h: &Expr,
    alpha: f64,
    ambient: &PolyhedralCone,
    rng: &mut R,
    samples: usize,
    scales: &[f64],
) -> Result<ValidationVerdict> {
    let mut verdict = ValidationVerdict::new(
        "positive_homogeneity",
        json!({"alpha": alpha, "samples": samples, "scales": scales, "tolerance": 1e-9}),
    );
    for x in cone_samples(ambient, rng, samples)? {
        let hx = h.eval(&x)?;
        for &t in scales {
            let expected = t.powf(alpha) * hx;
            let got = h.eval(&scale(&x, t))?;
            let err = (got - expected).abs() / (1.0 + expected.abs());
            verdict.observe(err);
            if err > 1e-9 {
                verdict.fail(&x, err, format!("h(tx) != t^alpha h(x) at t = {t}"));
            }
        }
    }
    Ok(verdict)
}

/// `r(t) = |f(x_t) - h(x_t)| / |x_t|^alpha` along members `x_t` realizing
/// each ray of `cone` at scale `t`. Passes when for every ray the ratio
/// does not grow from the first to the last scale and ends below
/// [`LITTLE_O_BOUND`].
pub fn check_little_o(
    f: &Expr,
    h: &Expr,
    alpha: f64,
    set: &SetDescription,
    cone: &ConeUnion,
    resolution: usize,
    scales: &[f64],
) -> Result<ValidationVerdict> {
    let rays = sphere_rays(cone, resolution);
    let mut verdict = ValidationVerdict::new(
        "little_o",
        json!({
            "alpha": alpha,
            "scales": scales,
            "resolution": resolution,
            "rays": rays.len(),
            "final_ratio_bound": LITTLE_O_BOUND,
        }),
    );
    let mut table = Vec::new();
    let mut per_ray: Vec<Vec<Option<f64>>> = vec![Vec::new(); rays.len()];
    for &t in scales {
        let eta = realization_tolerance(t);
        let mut realized = 0;
        for (k, v) in rays.rays.iter().enumerate() {
            let hit = set.nearest_member(&scale(v, t), eta * t);
            let ratio = match &hit {
                Some((x, _)) => {
                    realized += 1;
                    let gap = (f.eval(x)? - h.eval(x)?).abs();
                    Some(gap / norm(x).powf(alpha))
                }
                None => None,
            };
            per_ray[k].push(ratio);
            table.push(json!({
                "ray": v,
                "t": t,
                "point": hit.as_ref().map(|(x, _)| x.clone()),
                "ratio": ratio,
            }));
        }
        if realized == 0 && !rays.is_empty() {
            return Err(Error::OracleFailure(format!("no feasible points realize any ray at scale {t}")));
        }
    }
    for (k, ratios) in per_ray.iter().enumerate() {
        let known: Vec<f64> = ratios.iter().flatten().copied().collect();
        let (Some(&first), Some(&last)) = (known.first(), known.last()) else { continue };
        verdict.observe(last);
        if last > first * (1.0 + 1e-9) + 1e-15 {
            verdict.fail(&rays.rays[k], last, format!("ratio grows from {first:e} to {last:e}"));
        } else if last > LITTLE_O_BOUND {
            verdict.fail(&rays.rays[k], last, format!("ratio {last:e} at the largest scale exceeds the bound"));
        }
    }
    verdict.table = Some(serde_json::Value::Array(table));
    Ok(verdict)
}

/// `|h(v) - h̄(v)| <= 1e-9` on every ray; evaluation failures count as
/// disagreement.
pub fn asymptotic_agreement(h: &Expr, h_bar: &Expr, rays: &RaySet) -> ValidationVerdict {
    let mut verdict = ValidationVerdict::new(
        "asymptotic_agreement",
        json!({"rays": rays.len(), "resolution": rays.resolution, "tolerance": 1e-9}),
    );
    for v in &rays.rays {
        match (h.eval(v), h_bar.eval(v)) {
            (Ok(a), Ok(b)) => {
                let d = (a - b).abs();
                verdict.observe(d);
                if d > 1e-9 {
                    verdict.fail(v, d, "asymptotic functions disagree");
                }
            }
            _ => verdict.fail(v, f64::NAN, "evaluation failed"),
        }
    }
    verdict
}

/// A box, optionally intersected with the constraint set, sampled away
/// from fractional-power boundaries of the function being checked.
#[derive(Debug, Clone)]
pub struct Region<'a> {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub within: Option<&'a SetDescription>,
}

impl Region<'_> {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Region<'static> {
        Region { lo, hi, within: None }
    }

    /// Up to `count` points; gives up after `200 * count` draws.
    pub fn sample<R: Rng>(&self, f: &SmoothFn, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..200 * count {
            if out.len() == count {
                break;
            }
            let x: Vec<f64> = self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(&a, &b)| if a < b { rng.random_range(a..=b) } else { a })
                .collect();
            if self.within.is_some_and(|s| !s.contains(&x)) {
                continue;
            }
            if f.expr().min_fractional_base(&x).is_ok_and(|m| m >= DOMAIN_MARGIN) {
                out.push(x);
            }
        }
        out
    }

    fn describe(&self) -> serde_json::Value {
        json!({"lo": self.lo, "hi": self.hi, "intersect_constraints": self.within.is_some()})
    }
}

/// Pseudomonotonicity of the gradient on sampled pairs: whenever
/// `<∇f(x), y - x> >= 0`, require `<∇f(y), y - x> >= -tol` with
/// `tol = 1e-9 (1 + |∇f(y)| |y - x|)`.
pub fn check_pseudoconvexity<R: Rng>(f: &SmoothFn, region: &Region<'_>, rng: &mut R, pairs: usize) -> Result<ValidationVerdict> {
    let mut verdict = ValidationVerdict::new(
        "pseudoconvexity",
        json!({"pairs": pairs, "region": region.describe(), "tolerance": "1e-9*(1+|grad f(y)||y-x|)"}),
    );
    let pts = region.sample(f, rng, 2 * pairs);
    if pts.len() < 2 {
        return Err(Error::NoSamples("pseudoconvexity region has no interior samples".into()));
    }
    for pair in pts.chunks_exact(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let gx = f.gradient(x)?;
        let gy = f.gradient(y)?;
        let d = sub(y, x);
        if dot(&gx, &d) >= 0.0 {
            let tol = 1e-9 * (1.0 + norm(&gy) * norm(&d));
            let v = dot(&gy, &d);
            verdict.observe(-v / (1.0 + norm(&gy) * norm(&d)));
            if v < -tol {
                let mut both = x.clone();
                both.extend_from_slice(y);
                verdict.fail(&both, v, "gradient is not pseudomonotone on this pair (x then y)");
            }
        }
    }
    Ok(verdict)
}

/// Smallest Hessian eigenvalue `>= -1e-9` at sampled points.
pub fn check_convexity_hessian<R: Rng>(f: &SmoothFn, region: &Region<'_>, rng: &mut R, samples: usize) -> Result<ValidationVerdict> {
    let mut verdict = ValidationVerdict::new(
        "convexity_hessian",
        json!({"samples": samples, "region": region.describe(), "tolerance": 1e-9}),
    );
    let pts = region.sample(f, rng, samples);
    if pts.is_empty() {
        return Err(Error::NoSamples("convexity region has no interior samples".into()));
    }
    let n = f.dim();
    let mut worst = f64::INFINITY;
    for x in &pts {
        let h = f.hessian(x)?;
        let m = DMatrix::from_fn(n, n, |i, j| h[i][j]);
        let lmin = SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.min(lmin);
        if lmin < -1e-9 {
            verdict.fail(x, lmin, "Hessian has a negative eigenvalue");
        }
    }
    verdict.statistic = worst;
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LowerBound {
    /// `gamma` is the smallest value found, attained at `at`.
    Finite { gamma: f64, at: Vec<f64> },
    Unbounded { drop: f64, at: Vec<f64>, value: f64 },
}

/// Running minimum of `f` over members sampled at growing scales. A drop
/// of more than [`UNBOUNDED_DROP`] between the first and last scale flags
/// unboundedness; otherwise the best sample is polished by a feasible
/// pattern search and reported.
pub fn lower_bound_probe<R: Rng>(
    f: &SmoothFn,
    set: &SetDescription,
    start: Option<&[f64]>,
    rng: &mut R,
    scales: &[f64],
) -> Result<LowerBound> {
    let eval = |x: &[f64]| -> Option<f64> {
        if set.contains(x) {
            f.eval(x).ok().filter(|v| v.is_finite())
        } else {
            None
        }
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if let Some(v) = eval(&x) {
            if best.as_ref().is_none_or(|(bv, bx)| crate::vecops::better(v, &x, *bv, bx)) {
                *best = Some((v, x));
            }
        }
    };
    if let Some(s) = start {
        consider(s.to_vec(), &mut best);
    }
    if let Some(o) = set.project_into(&vec![0.0; set.dim()], None) {
        consider(o, &mut best);
    }
    let mut first_min = None;
    for &s in scales {
        for x in set.sample_members(rng, s, 100) {
            consider(x, &mut best);
        }
        for x in set.shell_members(s, None) {
            consider(x, &mut best);
        }
        if first_min.is_none() {
            first_min = best.as_ref().map(|(v, _)| *v);
        }
    }
    let (value, at) = best.ok_or(Error::NoFeasibleSeed)?;
    let first = first_min.unwrap_or(value);
    if first - value > UNBOUNDED_DROP {
        return Ok(LowerBound::Unbounded {
            drop: first - value,
            at,
            value,
        });
    }
    let repair = |x: &[f64]| set.project_into(x, None);
    let cfg = PatternConfig {
        initial_step: (0.1 * (1.0 + norm(&at))).min(10.0),
        min_step: 1e-10 * (1.0 + norm(&at)),
        ..PatternConfig::default()
    };
    let polished = pattern_search(&eval, &repair, &at, value, &cfg);
    Ok(LowerBound::Finite {
        gamma: polished.value,
        at: polished.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_infix;
    use crate::geometry::{LinearSystem, Piece};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(s: &str) -> Expr {
        parse_infix(s).unwrap()
    }

    fn sf(s: &str) -> SmoothFn {
        SmoothFn::new(e(s), 2).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn orthant() -> PolyhedralCone {
        PolyhedralCone::nonnegative_orthant(2)
    }

    fn orthant_set() -> SetDescription {
        SetDescription::new(
            2,
            vec![Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0])],
            orthant(),
            None,
            true,
        )
        .unwrap()
    }

    fn ex1_set() -> SetDescription {
        let disk = Piece::smooth(vec![e("(x1 - 2)^2 + (x2 - 2)^2 - 1")]);
        let ray = Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![-1.0, 0.0, 0.0]);
        SetDescription::new(2, vec![disk, ray], orthant(), None, false).unwrap()
    }

    fn ex2_set() -> SetDescription {
        let piece = Piece {
            linear: Some(LinearSystem {
                a: vec![vec![0.0, -1.0]],
                b: vec![-16.0],
            }),
            smooth: vec![e("2 - x1*x2")],
        };
        SetDescription::new(2, vec![piece], orthant(), Some(ConeUnion::single(orthant())), true).unwrap()
    }

    #[test]
    fn homogeneity_pairs() {
        let c = orthant();
        let s = &HOMOGENEITY_SCALES;
        assert!(check_positive_homogeneity(&e("sqrt(x1)"), 0.5, &c, &mut rng(), 200, s).unwrap().pass);
        assert!(check_positive_homogeneity(&e("x1*x2"), 2.0, &c, &mut rng(), 200, s).unwrap().pass);
        assert!(!check_positive_homogeneity(&e("x1*x2 + 1"), 2.0, &c, &mut rng(), 200, s).unwrap().pass);
        for lambda in ["0.5", "3"] {
            let h = e(&format!("{lambda}*x2^(5/2)"));
            assert!(check_positive_homogeneity(&h, 2.5, &c, &mut rng(), 200, s).unwrap().pass);
        }
    }

    #[test]
    fn little_o_on_first_example() {
        let f = e("x1*x2 + sqrt(x1)");
        let set = ex1_set();
        let k = set.asymptotic_cone().unwrap();
        let s = &LITTLE_O_SCALES;
        assert!(check_little_o(&f, &e("sqrt(x1)"), 0.5, &set, &k, 16, s).unwrap().pass);
        assert!(check_little_o(&f, &e("sqrt(x1) + sqrt(x2)"), 0.5, &set, &k, 16, s).unwrap().pass);
        let bad = check_little_o(&f, &e("x1*x2"), 0.5, &set, &k, 16, s).unwrap();
        assert!(!bad.pass);
        assert!((bad.statistic - 1.0).abs() < 1e-9, "{}", bad.statistic);
    }

    #[test]
    fn little_o_on_second_example() {
        let f = e("x2^(5/2) + 0.5*x1^2 - x1*x2");
        let set = ex2_set();
        let k = set.asymptotic_cone().unwrap();
        let v = check_little_o(&f, &e("x2^(5/2)"), 2.5, &set, &k, 16, &LITTLE_O_SCALES).unwrap();
        assert!(v.pass, "{:?}", v.offenders);
    }

    #[test]
    fn agreement_only_on_the_asymptotic_cone() {
        let h = e("sqrt(x1)");
        let hb = e("sqrt(x1) + sqrt(x2)");
        let axis = ConeUnion::single(PolyhedralCone::from_generators(2, vec![vec![1.0, 0.0]]).unwrap());
        assert!(asymptotic_agreement(&h, &hb, &sphere_rays(&axis, 90)).pass);
        let quad = ConeUnion::single(orthant());
        let v = asymptotic_agreement(&h, &hb, &sphere_rays(&quad, 90));
        assert!(!v.pass);
        assert!(v.offenders.iter().any(|o| o.point == vec![0.0, 1.0]));
        assert!(asymptotic_agreement(&h, &h, &sphere_rays(&quad, 90)).pass);
    }

    #[test]
    fn pseudoconvexity_examples() {
        let plane = Region::boxed(vec![-10.0, -10.0], vec![10.0, 10.0]);
        assert!(check_pseudoconvexity(&sf("x1^2 + x2^2"), &plane, &mut rng(), 500).unwrap().pass);
        assert!(!check_pseudoconvexity(&sf("-(x1^2 + x2^2)"), &plane, &mut rng(), 500).unwrap().pass);
        let u = Region::boxed(vec![0.1, 0.1], vec![100.0, 100.0]);
        let f = sf("x2^(5/2) + 0.5*x1^2 - x1*x2");
        assert!(check_pseudoconvexity(&f, &u, &mut rng(), 500).unwrap().pass);
    }

    #[test]
    fn hessian_convexity_examples() {
        let set = ex2_set();
        let u = Region {
            lo: vec![0.1, 0.1],
            hi: vec![100.0, 100.0],
            within: Some(&set),
        };
        let f = sf("x2^(5/2) + 0.5*x1^2 - x1*x2");
        let v = check_convexity_hessian(&f, &u, &mut rng(), 500).unwrap();
        assert!(v.pass && v.statistic > 0.0);
        let plane = Region::boxed(vec![-10.0, -10.0], vec![10.0, 10.0]);
        assert!(!check_convexity_hessian(&sf("x1*x2"), &plane, &mut rng(), 500).unwrap().pass);
        assert!(check_convexity_hessian(&sf("3*x1 - x2 + 7"), &plane, &mut rng(), 500).unwrap().pass);
    }

    #[test]
    fn lower_bounds() {
        let s = &LOWER_BOUND_SCALES;
        let set = ex2_set();
        let f = sf("x2^(5/2) + 0.5*x1^2 - x1*x2");
        match lower_bound_probe(&f, &set, Some(&[17.0, 16.0]), &mut rng(), s).unwrap() {
            LowerBound::Finite { gamma, .. } => assert!(gamma <= 896.0 + 1e-6 && gamma >= 896.0 - 1e-6, "{gamma}"),
            other => panic!("{other:?}"),
        }
        let q = orthant_set();
        assert!(matches!(
            lower_bound_probe(&sf("-x1"), &q, None, &mut rng(), s).unwrap(),
            LowerBound::Unbounded { .. }
        ));
        assert_eq!(
            lower_bound_probe(&sf("x1^2 + x2^2"), &q, None, &mut rng(), s).unwrap(),
            LowerBound::Finite {
                gamma: 0.0,
                at: vec![0.0, 0.0]
            }
        );
    }
}
