use serde::Serialize;

use super::nnls::project_onto_cone;
use super::rays::{sphere_rays, RaySet};
use super::GeometryError;
use crate::vecops::{dist, dot, norm, normalized, scale};

/// Finitely generated cone, with a generator view (nonnegative combinations
/// of unit vectors) and/or a half-space view `{v : row . v <= 0}`.
///
/// For `dim <= 3` both views are always available; the missing one is
/// reconstructed on construction. Above that only the given view exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyhedralCone {
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    halfspaces: Option<Vec<Vec<f64>>>,
}

const FEASIBLE_TOL: f64 = 1e-10;
pub const MEMBERSHIP_TOL: f64 = 1e-9;

fn unit_dedup(dim: usize, vs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, GeometryError> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        if v.len() != dim {
            return Err(GeometryError::Dimension {
                expected: dim,
                found: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let Some(u) = normalized(&v) else { continue };
        if norm(&v) < 1e-14 {
            continue;
        }
        if !out.iter().any(|w| dist(w, &u) < 1e-12) {
            out.push(u);
        }
    }
    Ok(out)
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Extreme-ray candidates of `{v : rows . v <= 0}` for `dim <= 3`: unit
/// vectors annihilated by `dim - 1` of the rows or coordinate axes (the
/// axes cover cones with a lineality space).
fn reconstruct_generators(dim: usize, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pool: Vec<Vec<f64>> = rows.to_vec();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        pool.push(e);
    }
    let mut cands: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            cands.push(vec![1.0]);
            cands.push(vec![-1.0]);
        }
        2 => {
            for a in &pool {
                if let Some(t) = normalized(&[-a[1], a[0]]) {
                    cands.push(scale(&t, -1.0));
                    cands.push(t);
                }
            }
        }
        3 => {
            for i in 0..pool.len() {
                for j in (i + 1)..pool.len() {
                    let c = cross(&pool[i], &pool[j]);
                    if norm(&c) < 1e-12 {
                        continue;
                    }
                    let t = normalized(&c).unwrap();
                    cands.push(scale(&t, -1.0));
                    cands.push(t);
                }
            }
        }
        _ => unreachable!("generator reconstruction is limited to dim <= 3"),
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in cands {
        let c: Vec<f64> = c.into_iter().map(|x| if x.abs() < 1e-15 { 0.0 } else { x }).collect();
        if rows.iter().all(|r| dot(r, &c) <= FEASIBLE_TOL) && !out.iter().any(|w| dist(w, &c) < 1e-9) {
            out.push(c);
        }
    }
    out
}

impl PolyhedralCone {
    pub fn from_generators(dim: usize, gens: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let generators = unit_dedup(dim, gens)?;
        let mut c = PolyhedralCone {
            dim,
            generators: Some(generators),
            halfspaces: None,
        };
        if dim <= 3 {
            // Facets of cone(G) are the generators of the polar of the polar.
            let polar_gens = reconstruct_generators(dim, c.generators.as_ref().unwrap());
            c.halfspaces = Some(polar_gens);
        }
        Ok(c)
    }

    pub fn from_halfspaces(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let rows = unit_dedup(dim, rows)?;
        let generators = (dim <= 3).then(|| reconstruct_generators(dim, &rows));
        Ok(PolyhedralCone {
            dim,
            generators,
            halfspaces: Some(rows),
        })
    }

    pub fn zero(dim: usize) -> Self {
        PolyhedralCone::from_generators(dim, Vec::new()).unwrap()
    }

    pub fn full(dim: usize) -> Self {
        PolyhedralCone::from_halfspaces(dim, Vec::new()).unwrap()
    }

    pub fn nonnegative_orthant(dim: usize) -> Self {
        let gens = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        PolyhedralCone::from_generators(dim, gens).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> Result<&[Vec<f64>], GeometryError> {
        self.generators
            .as_deref()
            .ok_or(GeometryError::DimensionTooLarge(self.dim))
    }

    pub fn halfspaces(&self) -> Option<&[Vec<f64>]> {
        self.halfspaces.as_deref()
    }

    pub fn is_trivial(&self) -> bool {
        match &self.generators {
            Some(g) => g.is_empty(),
            None => false,
        }
    }

    /// Distance from `v` to the cone (needs the generator view).
    pub fn distance(&self, v: &[f64]) -> Result<f64, GeometryError> {
        let g = self.generators()?;
        if g.is_empty() {
            return Ok(norm(v));
        }
        Ok(dist(&project_onto_cone(g, v), v))
    }

    /// Membership with absolute tolerance `tol` scaled by `max(1, |v|)`.
    pub fn contains_tol(&self, v: &[f64], tol: f64) -> bool {
        let t = tol * norm(v).max(1.0);
        if let Some(rows) = &self.halfspaces {
            if self.generators.as_ref().is_some_and(|g| g.is_empty()) {
                return norm(v) <= t;
            }
            return rows.iter().all(|r| dot(r, v) <= t);
        }
        self.distance(v).map(|d| d <= t).unwrap_or(false)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.contains_tol(v, MEMBERSHIP_TOL)
    }

    /// True when no line lies in the cone. A cone contains a line iff the
    /// negative of one of its generators is a member.
    pub fn is_pointed(&self) -> Result<bool, GeometryError> {
        let g = self.generators()?;
        Ok(!g.iter().any(|v| self.contains(&scale(v, -1.0))))
    }

    /// Polar cone `{u : <u, g> <= 0 for every generator g}`.
    pub fn polar(&self) -> Result<PolyhedralCone, GeometryError> {
        let g = self.generators()?.to_vec();
        PolyhedralCone::from_halfspaces(self.dim, g)
    }

    /// Generator-wise inclusion `self ⊂ other`.
    pub fn is_subset_of(&self, other: &PolyhedralCone) -> Result<bool, GeometryError> {
        Ok(self.generators()?.iter().all(|g| other.contains(g)))
    }

    /// Compare the two views on `samples` unit vectors; returns the number of
    /// disagreements (0 when only one view exists).
    pub fn view_disagreements(&self, samples: &[Vec<f64>]) -> usize {
        let (Some(g), Some(rows)) = (&self.generators, &self.halfspaces) else {
            return 0;
        };
        samples
            .iter()
            .filter(|v| {
                let by_rows = rows.iter().all(|r| dot(r, v) <= MEMBERSHIP_TOL);
                let d = if g.is_empty() {
                    norm(v)
                } else {
                    dist(&project_onto_cone(g, v), v)
                };
                let by_gens = d <= MEMBERSHIP_TOL;
                by_rows != by_gens
            })
            .count()
    }

    /// Interior margin of `u` with respect to this cone read in its
    /// half-space view, i.e. as the polar of the primal cone generated by the
    /// rows: `-max <u, v>` over the unit rows and a ray discretization of the
    /// primal cone. Positive iff `u` is (numerically) interior. A `{0}`
    /// primal cone has no rays and gives `+inf`.
    pub fn interior_margin(&self, u: &[f64], resolution: usize) -> Result<f64, GeometryError> {
        let rows = self
            .halfspaces
            .as_ref()
            .ok_or(GeometryError::MissingHalfspaces)?;
        if rows.is_empty() {
            return Ok(f64::INFINITY);
        }
        let primal = PolyhedralCone::from_generators(self.dim, rows.clone())?;
        let rays = sphere_rays(&ConeUnion::single(primal), resolution);
        Ok(margin_over(rows.iter().chain(rays.rays.iter()), u))
    }
}

/// `-max <u, v>` over the given unit vectors (`+inf` when there are none).
pub fn margin_over<'a>(rays: impl Iterator<Item = &'a Vec<f64>>, u: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for v in rays {
        worst = worst.max(dot(u, v));
    }
    -worst
}

/// Finite union of polyhedral cones; the canonical representation of an
/// asymptotic cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConeUnion {
    pub cones: Vec<PolyhedralCone>,
}

impl ConeUnion {
    pub fn single(c: PolyhedralCone) -> Self {
        ConeUnion { cones: vec![c] }
    }

    pub fn dim(&self) -> usize {
        self.cones.first().map(|c| c.dim).unwrap_or(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.cones.iter().all(PolyhedralCone::is_trivial)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.cones.iter().any(|c| c.contains(v))
    }

    pub fn distance(&self, v: &[f64]) -> Result<f64, GeometryError> {
        let mut best = f64::INFINITY;
        for c in &self.cones {
            best = best.min(c.distance(v)?);
        }
        Ok(best)
    }

    pub fn generators(&self) -> Result<Vec<Vec<f64>>, GeometryError> {
        let mut out = Vec::new();
        for c in &self.cones {
            out.extend(c.generators()?.iter().cloned());
        }
        Ok(out)
    }

    /// Drop `{0}` components when a nontrivial one exists and remove
    /// duplicate components.
    pub fn dedup(self) -> Self {
        let dim = self.dim();
        let mut out: Vec<PolyhedralCone> = Vec::new();
        for c in self.cones {
            if c.is_trivial() {
                continue;
            }
            let dup = out.iter().any(|o| {
                matches!((o.is_subset_of(&c), c.is_subset_of(o)), (Ok(true), Ok(true)))
            });
            if !dup {
                out.push(c);
            }
        }
        if out.is_empty() {
            out.push(PolyhedralCone::zero(dim));
        }
        ConeUnion { cones: out }
    }

    pub fn rays(&self, resolution: usize) -> RaySet {
        sphere_rays(self, resolution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rays::fibonacci_sphere;
    use proptest::prelude::*;

    #[test]
    fn polar_examples() {
        let zero = PolyhedralCone::zero(2);
        let p = zero.polar().unwrap();
        assert!(p.contains(&[3.0, -7.0]));
        assert!(p.contains(&[-1.0, 0.5]));

        let orthant = PolyhedralCone::nonnegative_orthant(2);
        let p = orthant.polar().unwrap();
        assert!(p.contains(&[-1.0, -2.0]));
        assert!(!p.contains(&[1.0, -2.0]));
        let mut g = p.generators().unwrap().to_vec();
        g.sort_by(|a, b| crate::vecops::lex_cmp(a, b));
        assert_eq!(g, vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);

        let ray = PolyhedralCone::from_generators(2, vec![vec![1.0, 0.0]]).unwrap();
        let p = ray.polar().unwrap();
        assert!(p.contains(&[-1.0, 5.0]));
        assert!(p.contains(&[0.0, -3.0]));
        assert!(!p.contains(&[0.1, 0.0]));
        assert!(!p.is_pointed().unwrap());
    }

    #[test]
    fn margins() {
        let ray = PolyhedralCone::from_generators(2, vec![vec![1.0, 0.0]]).unwrap();
        let p = ray.polar().unwrap();
        assert_eq!(p.interior_margin(&[-1.0, 5.0], 90).unwrap(), 1.0);
        assert_eq!(p.interior_margin(&[0.0, 1.0], 90).unwrap(), 0.0);
        let all = PolyhedralCone::zero(2).polar().unwrap();
        assert_eq!(all.interior_margin(&[3.0, 3.0], 90).unwrap(), f64::INFINITY);
    }

    #[test]
    fn pointedness() {
        assert!(PolyhedralCone::nonnegative_orthant(2).is_pointed().unwrap());
        let half = PolyhedralCone::from_halfspaces(2, vec![vec![1.0, 0.0]]).unwrap();
        assert!(!half.is_pointed().unwrap());
        assert!(half.contains(&[-5.0, 100.0]));
        assert!(PolyhedralCone::zero(3).is_pointed().unwrap());
    }

    #[test]
    fn halfspace_reconstruction_handles_lineality() {
        let skew = PolyhedralCone::from_halfspaces(2, vec![vec![1.0, 1.0]]).unwrap();
        let line3 = PolyhedralCone::from_halfspaces(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let plane3 = PolyhedralCone::from_halfspaces(3, vec![vec![1.0, -2.0, 0.5]]).unwrap();
        let simplex = PolyhedralCone::from_halfspaces(
            2,
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
        )
        .unwrap();
        assert!(simplex.is_trivial());
        let s2 = fibonacci_sphere(2000);
        let circle: Vec<Vec<f64>> = (0..720)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 360.0 + 0.001;
                vec![t.cos(), t.sin()]
            })
            .collect();
        assert_eq!(skew.view_disagreements(&circle), 0);
        assert_eq!(line3.view_disagreements(&s2), 0);
        assert_eq!(plane3.view_disagreements(&s2), 0);
    }

    fn random_cone(dim: usize, raw: Vec<Vec<f64>>) -> PolyhedralCone {
        let gens: Vec<Vec<f64>> = raw.into_iter().map(|v| v[..dim].to_vec()).collect();
        PolyhedralCone::from_generators(dim, gens).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn polar_is_an_involution(
            dim in 2usize..=3,
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 0..=5),
        ) {
            let c = random_cone(dim, raw);
            let pp = c.polar().unwrap().polar().unwrap();
            let samples: Vec<Vec<f64>> = if dim == 3 {
                fibonacci_sphere(1000)
            } else {
                (0..1000).map(|k| {
                    let t = (k as f64 + 0.37) * std::f64::consts::TAU / 1000.0;
                    vec![t.cos(), t.sin()]
                }).collect()
            };
            for v in &samples {
                let d = c.distance(v).unwrap();
                let dpp = pp.distance(v).unwrap();
                // skip samples within the tolerance band of the boundary
                if d.min(dpp) < 1e-8 && d.max(dpp) > 1e-8 && (d - dpp).abs() < 1e-8 {
                    continue;
                }
                prop_assert_eq!(d <= 1e-8, dpp <= 1e-8, "v={:?} d={} dpp={}", v, d, dpp);
            }
        }

        #[test]
        fn polar_reverses_inclusion(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..=4),
            extra in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..=2),
        ) {
            let small = random_cone(3, raw.clone());
            let mut all = raw;
            all.extend(extra);
            let big = random_cone(3, all);
            let p_small = small.polar().unwrap();
            let p_big = big.polar().unwrap();
            for v in fibonacci_sphere(500) {
                if p_big.contains_tol(&v, 1e-9) {
                    prop_assert!(p_small.contains_tol(&v, 1e-8));
                }
            }
        }

        #[test]
        fn views_agree(
            dim in 2usize..=3,
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 0..=5),
        ) {
            let c = random_cone(dim, raw);
            let samples = if dim == 3 { fibonacci_sphere(2000) } else {
                (0..2000).map(|k| {
                    let t = (k as f64 + 0.21) * std::f64::consts::TAU / 2000.0;
                    vec![t.cos(), t.sin()]
                }).collect()
            };
            // boundary samples can flip between views at the 1e-9 level
            prop_assert!(c.view_disagreements(&samples) <= 2);
        }
    }
}
