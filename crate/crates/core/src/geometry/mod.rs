//! Constraint sets, asymptotic cones, polar cones and sphere sections.
//!
//! A constraint set is a finite union of pieces, each an intersection of
//! linear inequalities `Ax <= b` and smooth inequalities `c(x) <= 0`.
//! Asymptotic cones of linear and bounded pieces are computed; those of
//! unbounded smooth pieces must be declared and are validated numerically.

mod cone;
mod nnls;
pub mod project;
pub mod rays;

use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::expr::Expr;
use crate::vecops::{dist, dot, norm, normalized, scale};
use crate::verdict::ValidationVerdict;
pub use cone::{margin_over, ConeUnion, PolyhedralCone, MEMBERSHIP_TOL};
pub use nnls::{nnls, project_onto_cone};
use project::Ball;
pub use rays::{fibonacci_sphere, sphere_directions, sphere_rays, spacing_for, RaySet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("expected a vector of dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("generator reconstruction is only available for n <= 3 (n = {0})")]
    DimensionTooLarge(usize),
    #[error("the cone has no half-space view")]
    MissingHalfspaces,
    #[error("the constraint set has no pieces")]
    NoPieces,
    #[error("piece {0} has no constraints")]
    EmptyPiece(usize),
    #[error("piece {piece} may be unbounded and has smooth constraints; declare its asymptotic cone")]
    Undeclared { piece: usize },
    #[error("membership oracle failure: {0}")]
    OracleFailure(String),
}

/// `Ax <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Intersection of linear constraints `Ax <= b` and smooth constraints
/// `c_i(x) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub linear: Option<LinearSystem>,
    pub smooth: Vec<Expr>,
}

/// Tolerance on constraint values.
pub const CONSTRAINT_TOL: f64 = 1e-9;

fn check_vec(dim: usize, v: &[f64]) -> Result<(), GeometryError> {
    if v.len() != dim {
        return Err(GeometryError::Dimension {
            expected: dim,
            found: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    Ok(())
}

impl Piece {
    pub fn linear(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        Piece {
            linear: Some(LinearSystem { a, b }),
            smooth: Vec::new(),
        }
    }

    pub fn smooth(smooth: Vec<Expr>) -> Self {
        Piece { linear: None, smooth }
    }

    fn validate(&self, dim: usize, index: usize) -> Result<(), GeometryError> {
        let rows = self.linear.as_ref().map_or(0, |l| l.a.len());
        if rows == 0 && self.smooth.is_empty() {
            return Err(GeometryError::EmptyPiece(index));
        }
        if let Some(l) = &self.linear {
            if l.a.len() != l.b.len() {
                return Err(GeometryError::Dimension {
                    expected: l.a.len(),
                    found: l.b.len(),
                });
            }
            for r in &l.a {
                check_vec(dim, r)?;
            }
            check_vec(l.b.len(), &l.b)?;
        }
        for c in &self.smooth {
            if let Some(m) = c.max_var() {
                if m >= dim {
                    return Err(GeometryError::Dimension {
                        expected: dim,
                        found: m + 1,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn satisfies_linear(&self, x: &[f64]) -> bool {
        let Some(l) = &self.linear else { return true };
        let slack = 1.0 + 1e-6 * norm(x);
        l.a.iter()
            .zip(&l.b)
            .all(|(row, &bi)| dot(row, x) - bi <= CONSTRAINT_TOL * slack * norm(row).max(1.0))
    }

    /// Membership; a domain error in a smooth constraint means "outside".
    pub fn contains(&self, x: &[f64]) -> bool {
        self.satisfies_linear(x)
            && self
                .smooth
                .iter()
                .all(|c| c.eval(x).is_ok_and(|v| v <= CONSTRAINT_TOL))
    }

    pub fn is_linear(&self) -> bool {
        self.smooth.is_empty()
    }

    /// Projection onto the linear part intersected with an optional ball.
    pub fn project_linear(&self, x: &[f64], ball: Option<&Ball<'_>>) -> Option<Vec<f64>> {
        match &self.linear {
            Some(l) => project::project(&l.a, &l.b, ball, x),
            None => project::project(&[], &[], ball, x),
        }
    }

    /// `{v : Av <= 0}`, the recession cone of the linear part.
    pub fn linear_recession(&self, dim: usize) -> Result<PolyhedralCone, GeometryError> {
        let rows = self.linear.as_ref().map(|l| l.a.clone()).unwrap_or_default();
        PolyhedralCone::from_halfspaces(dim, rows)
    }
}

/// The constraint set `K`: a union of pieces inside an ambient cone `C`.
#[derive(Debug, Clone)]
pub struct SetDescription {
    dim: usize,
    pub pieces: Vec<Piece>,
    pub ambient: PolyhedralCone,
    pub declared_asymptotic: Option<ConeUnion>,
    /// User assertion; spot-checked by [`convexity_midpoint_check`].
    pub convex: bool,
}

/// Radii at which the set is probed for far-away members.
pub const FAR_RADII: [f64; 4] = [1e2, 1e3, 1e4, 1e5];

impl SetDescription {
    pub fn new(
        dim: usize,
        pieces: Vec<Piece>,
        ambient: PolyhedralCone,
        declared_asymptotic: Option<ConeUnion>,
        convex: bool,
    ) -> Result<Self, GeometryError> {
        if pieces.is_empty() {
            return Err(GeometryError::NoPieces);
        }
        for (i, p) in pieces.iter().enumerate() {
            p.validate(dim, i)?;
        }
        if ambient.dim() != dim {
            return Err(GeometryError::Dimension {
                expected: dim,
                found: ambient.dim(),
            });
        }
        if let Some(d) = &declared_asymptotic {
            if d.cones.is_empty() {
                return Err(GeometryError::NoPieces);
            }
            for c in &d.cones {
                if c.dim() != dim {
                    return Err(GeometryError::Dimension {
                        expected: dim,
                        found: c.dim(),
                    });
                }
            }
        }
        Ok(SetDescription {
            dim,
            pieces,
            ambient,
            declared_asymptotic,
            convex,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// True when every piece is `{x : Ax <= 0}`, so `K` is a cone.
    pub fn is_cone(&self) -> bool {
        self.pieces.iter().all(|p| {
            p.is_linear() && p.linear.as_ref().is_some_and(|l| l.b.iter().all(|&b| b == 0.0))
        })
    }

    /// Closest member among the per-piece projections of `x` onto the
    /// linear parts (intersected with `ball`), if any is a member.
    pub fn project_into(&self, x: &[f64], ball: Option<&Ball<'_>>) -> Option<Vec<f64>> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for p in &self.pieces {
            if let Some(y) = p.project_linear(x, ball) {
                if self.contains(&y) {
                    let d = dist(&y, x);
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, y));
                    }
                }
            }
        }
        best.map(|(_, y)| y)
    }

    fn shell_dirs(&self) -> Vec<Vec<f64>> {
        let count = match self.dim {
            2 => 360,
            3 => 600,
            _ => 1000,
        };
        sphere_directions(self.dim, count)
    }

    /// Members found by projecting points `radius * d` (for spread unit
    /// directions `d`) onto each piece's linear part, restricted to one
    /// piece when `only` is given.
    pub fn shell_members(&self, radius: f64, only: Option<usize>) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for d in self.shell_dirs() {
            let y = scale(&d, radius);
            for (i, p) in self.pieces.iter().enumerate() {
                if only.is_some_and(|o| o != i) {
                    continue;
                }
                if let Some(z) = p.project_linear(&y, None) {
                    if p.contains(&z) {
                        out.push(z);
                    }
                }
            }
        }
        out
    }

    /// A member within `max_dist` of `target`, as close as the search finds.
    /// Searches spheres around `target` of growing radius and stops at the
    /// first radius that yields a member.
    pub fn nearest_member(&self, target: &[f64], max_dist: f64) -> Option<(Vec<f64>, f64)> {
        let ball = Ball {
            center: target,
            radius: max_dist,
        };
        if let Some(y) = self.project_into(target, Some(&ball)) {
            return Some((y.clone(), dist(&y, target)));
        }
        // pieces whose linear part stays farther than max_dist cannot help
        let reachable: Vec<&Piece> = self
            .pieces
            .iter()
            .filter(|p| {
                p.linear.is_none()
                    || p.project_linear(target, None).is_some_and(|z| dist(&z, target) <= max_dist * (1.0 + 1e-9))
            })
            .collect();
        if reachable.is_empty() {
            return None;
        }
        let dirs = self.shell_dirs();
        let mut r = max_dist * 1e-9;
        while r <= max_dist * (1.0 + 1e-12) {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for d in &dirs {
                let y: Vec<f64> = target.iter().zip(d).map(|(t, di)| t + r * di).collect();
                for p in &reachable {
                    let Some(z) = p.project_linear(&y, Some(&ball)) else { continue };
                    if p.contains(&z) {
                        let dz = dist(&z, target);
                        if best.as_ref().is_none_or(|(_, bd)| dz < *bd) {
                            best = Some((z, dz));
                        }
                    }
                }
            }
            if best.is_some() {
                return best;
            }
            r *= 2.0;
        }
        None
    }

    fn piece_seems_bounded(&self, index: usize) -> bool {
        FAR_RADII
            .iter()
            .all(|&r| self.shell_members(r, Some(index)).is_empty())
    }

    /// `K∞` as a union of polyhedral cones: a declaration passes through;
    /// otherwise linear pieces give `{v : Av <= 0}`, pieces whose linear
    /// part or probe shows them bounded give `{0}`.
    pub fn asymptotic_cone(&self) -> Result<ConeUnion, GeometryError> {
        if let Some(d) = &self.declared_asymptotic {
            return Ok(d.clone().dedup());
        }
        let mut cones = Vec::with_capacity(self.pieces.len());
        for (i, p) in self.pieces.iter().enumerate() {
            let rec = p.linear_recession(self.dim)?;
            if p.is_linear() || rec.is_trivial() {
                cones.push(rec);
            } else if self.piece_seems_bounded(i) {
                cones.push(PolyhedralCone::zero(self.dim));
            } else {
                return Err(GeometryError::Undeclared { piece: i });
            }
        }
        Ok(ConeUnion { cones }.dedup())
    }

    /// Members on a uniform random draw: points of `B(0, radius)` projected
    /// onto a random piece's linear part. Up to `50 * count` attempts.
    pub fn sample_members<R: Rng>(&self, rng: &mut R, radius: f64, count: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..50 * count {
            if out.len() == count {
                break;
            }
            let y: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-radius..=radius)).collect();
            let p = &self.pieces[rng.random_range(0..self.pieces.len())];
            if let Some(z) = p.project_linear(&y, None) {
                if p.contains(&z) {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// `eta(t) = 10 / sqrt(t)`: allowed drift of `x_t / t` from a generator.
pub fn realization_tolerance(t: f64) -> f64 {
    10.0 / t.sqrt()
}

/// Allowed distance of far members' directions from the cone.
pub const ESCAPE_TOL: f64 = 1e-3;

/// Numerical check of a declared `K∞`: every generator is realized by
/// members `x_t` with `|x_t / t - v| <= eta(t)` at every scale, and far
/// members found by shell probing point into the cone.
pub fn validate_asymptotic_cone(
    set: &SetDescription,
    cone: &ConeUnion,
    scales: &[f64],
) -> Result<ValidationVerdict, GeometryError> {
    let mut verdict = ValidationVerdict::new(
        "asymptotic_cone",
        json!({
            "scales": scales,
            "eta": "10/sqrt(t)",
            "escape_tolerance": ESCAPE_TOL,
            "escape_radii": [1e3, 1e4, 1e5],
        }),
    );
    let generators = cone.generators()?;
    let mut table = Vec::new();
    for &t in scales {
        let eta = realization_tolerance(t);
        let mut found_any = false;
        for v in &generators {
            let target = scale(v, t);
            let hit = set.nearest_member(&target, eta * t);
            let drift = hit.as_ref().map_or(f64::INFINITY, |(_, d)| d / t);
            found_any |= hit.is_some();
            table.push(json!({"t": t, "generator": v, "drift": drift, "eta": eta}));
            verdict.observe(drift / eta);
            if hit.is_none() {
                verdict.fail(&target, drift, format!("generator not realized at scale {t}"));
            }
        }
        if !generators.is_empty() && !found_any && set.shell_members(t, None).is_empty() {
            return Err(GeometryError::OracleFailure(format!(
                "no feasible points found at scale {t}"
            )));
        }
    }
    for r in [1e3, 1e4, 1e5] {
        for x in set.shell_members(r, None) {
            if norm(&x) < 1e3 {
                continue;
            }
            let u = normalized(&x).expect("far member is nonzero");
            let d = cone.distance(&u)?;
            if d > ESCAPE_TOL {
                verdict.fail(&x, d, "far member escapes the declared cone");
            }
        }
    }
    verdict.table = Some(serde_json::Value::Array(table));
    Ok(verdict)
}

/// Spot check of the convexity assertion: midpoints of pairs of sampled
/// members must be members.
pub fn convexity_midpoint_check<R: Rng>(
    set: &SetDescription,
    rng: &mut R,
    pairs: usize,
    radius: f64,
) -> ValidationVerdict {
    let mut verdict = ValidationVerdict::new("convexity_midpoints", json!({"pairs": pairs, "radius": radius}));
    let members = set.sample_members(rng, radius, 2 * pairs);
    for pair in members.chunks_exact(2) {
        let mid: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        if !set.contains(&mid) {
            verdict.fail(&mid, dist(&pair[0], &pair[1]), "midpoint of two members is outside the set");
        }
    }
    verdict.statistic = members.len() as f64 / 2.0;
    verdict
}

/// Sampled members lie in the ambient cone, and the asymptotic cone's
/// generators do too.
pub fn ambient_check<R: Rng>(
    set: &SetDescription,
    cone: &ConeUnion,
    rng: &mut R,
    samples: usize,
    radius: f64,
) -> Result<ValidationVerdict, GeometryError> {
    let mut verdict = ValidationVerdict::new("ambient_containment", json!({"samples": samples, "radius": radius}));
    for x in set.sample_members(rng, radius, samples) {
        if !set.ambient.contains(&x) {
            verdict.fail(&x, set.ambient.distance(&x).unwrap_or(f64::NAN), "member outside the ambient cone");
        }
    }
    for g in cone.generators()? {
        if !set.ambient.contains(&g) {
            verdict.fail(&g, set.ambient.distance(&g).unwrap_or(f64::NAN), "asymptotic generator outside the ambient cone");
        }
    }
    Ok(verdict)
}

/// Uniform grid over the box `[lo, hi]` with `per_axis` points per axis,
/// in row-major order (last coordinate fastest).
pub fn box_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let n = lo.len();
    let per_axis = per_axis.max(2);
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let j = k % per_axis;
            k /= per_axis;
            x[i] = lo[i] + (hi[i] - lo[i]) * j as f64 / (per_axis - 1) as f64;
        }
        out.push(x);
    }
    out
}
