//! Discretizations of `cone ∩ S^{n-1}`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::cone::{ConeUnion, PolyhedralCone};
use crate::vecops::{dist, dot, normalized};

/// Unit vectors covering a union of cones, each tagged with the index of the
/// component it came from.
#[derive(Debug, Clone, Serialize)]
pub struct RaySet {
    pub rays: Vec<Vec<f64>>,
    pub sources: Vec<usize>,
    pub resolution: usize,
    /// Nominal angular spacing in radians, `(pi/2) / resolution`.
    pub spacing: f64,
}

impl RaySet {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

pub fn spacing_for(resolution: usize) -> f64 {
    FRAC_PI_2 / resolution.max(1) as f64
}

fn snap(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| if x.abs() < 1e-15 { 0.0 } else { x }).collect()
}

fn unit2(theta: f64) -> Vec<f64> {
    snap(vec![theta.cos(), theta.sin()])
}

fn angle(v: &[f64]) -> f64 {
    let a = v[1].atan2(v[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Angular grid over a planar cone, endpoints taken exactly from generators.
fn planar_rays(cone: &PolyhedralCone, spacing: f64) -> Vec<Vec<f64>> {
    let gens = cone.generators().expect("planar cones always carry generators");
    if gens.is_empty() {
        return Vec::new();
    }
    if gens.len() == 1 {
        return vec![gens[0].clone()];
    }
    let mut order: Vec<(f64, &Vec<f64>)> = gens.iter().map(|g| (angle(g), g)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = order.len();
    let (mut gap, mut at) = (f64::NEG_INFINITY, 0);
    for i in 0..m {
        let next = if i + 1 < m { order[i + 1].0 } else { order[0].0 + TAU };
        let g = next - order[i].0;
        if g > gap {
            gap = g;
            at = i;
        }
    }
    let full_circle = |n: usize| -> Vec<Vec<f64>> { (0..n).map(|k| unit2(k as f64 * TAU / n as f64)).collect() };
    if gap < PI - 1e-12 {
        return full_circle(((TAU / spacing) - 1e-9).ceil() as usize);
    }
    let (start_angle, start) = order[(at + 1) % m];
    let (_, end) = order[at];
    let span = TAU - gap;
    if (gap - PI).abs() <= 1e-12 && m == 2 {
        // a line through the origin
        return vec![start.clone(), end.clone()];
    }
    let arcs = ((span / spacing) - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(arcs + 1);
    out.push(start.clone());
    for k in 1..arcs {
        out.push(unit2(start_angle + span * k as f64 / arcs as f64));
    }
    out.push(end.clone());
    out
}

/// Quasi-uniform points on S^2 (golden-angle spiral).
pub fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let t = golden * i as f64;
            snap(vec![r * t.cos(), r * t.sin(), z])
        })
        .collect()
}

/// Evenly spread unit directions in `dim` dimensions, used for shell
/// sampling. Deterministic.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count).map(|k| unit2(k as f64 * TAU / count as f64)).collect(),
        3 => fibonacci_sphere(count),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .filter_map(|_| {
                    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    normalized(&g)
                })
                .collect()
        }
    }
}

/// Points on the great-circle arc from `a` to `b` (exclusive), at most
/// `spacing` apart. Antipodal pairs give nothing.
fn arc(a: &[f64], b: &[f64], spacing: f64) -> Vec<Vec<f64>> {
    let c = dot(a, b).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta <= spacing || PI - theta < 1e-9 {
        return Vec::new();
    }
    let steps = (theta / spacing).ceil() as usize;
    let s = theta.sin();
    (1..steps)
        .filter_map(|k| {
            let t = theta * k as f64 / steps as f64;
            let (wa, wb) = ((theta - t).sin() / s, t.sin() / s);
            normalized(&a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect::<Vec<_>>())
        })
        .collect()
}

/// Unit rays covering every component of `union`, plus all generators.
/// `resolution` is the number of grid steps per right angle. Rays within
/// half the spacing of an earlier ray are dropped.
pub fn sphere_rays(union: &ConeUnion, resolution: usize) -> RaySet {
    let spacing = spacing_for(resolution);
    let dim = union.dim();
    let cutoff = spacing / 2.0;
    let mut rays: Vec<Vec<f64>> = Vec::new();
    let mut sources = Vec::new();
    for (idx, cone) in union.cones.iter().enumerate() {
        if cone.is_trivial() {
            continue;
        }
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        let mut grid: Vec<Vec<f64>> = Vec::new();
        let gens: Vec<Vec<f64>> = cone.generators().map(|g| g.to_vec()).unwrap_or_default();
        if dim == 2 {
            candidates = planar_rays(cone, spacing);
        } else {
            candidates.extend(gens.iter().cloned());
            if dim == 3 {
                // edges and low-dimensional faces are missed by the sphere grid
                for i in 0..gens.len() {
                    for j in (i + 1)..gens.len() {
                        candidates.extend(
                            arc(&gens[i], &gens[j], spacing)
                                .into_iter()
                                .filter(|v| cone.contains_tol(v, 1e-12)),
                        );
                    }
                }
            }
            let count = match dim {
                1 => 0,
                3 => ((4.0 * PI / (spacing * spacing)).ceil() as usize).max(8),
                _ => 2000,
            };
            let structured = candidates.len();
            for v in sphere_directions(dim, count) {
                if cone.contains_tol(&v, 1e-12)
                    && !candidates[..structured].iter().any(|w| dist(w, &v) < cutoff)
                    && !union.cones[..idx].iter().any(|c| c.contains_tol(&v, 1e-12))
                {
                    grid.push(v);
                }
            }
        }
        for v in candidates {
            if !rays.iter().any(|w| dist(w, &v) < cutoff) {
                rays.push(v);
                sources.push(idx);
            }
        }
        // grid points are already spread out; skip the quadratic check
        sources.extend(std::iter::repeat_n(idx, grid.len()));
        rays.extend(grid);
    }
    RaySet {
        rays,
        sources,
        resolution,
        spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_grid_has_91_rays() {
        let r = sphere_rays(&ConeUnion::single(PolyhedralCone::nonnegative_orthant(2)), 90);
        assert_eq!(r.len(), 91);
        assert!(r.rays.contains(&vec![1.0, 0.0]));
        assert!(r.rays.contains(&vec![0.0, 1.0]));
        for v in &r.rays {
            assert!(v[0] >= 0.0 && v[1] >= 0.0);
            assert!((dot(v, v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_ray_and_zero() {
        let ray = PolyhedralCone::from_generators(2, vec![vec![3.0, 0.0]]).unwrap();
        for res in [4, 90, 1000] {
            assert_eq!(sphere_rays(&ConeUnion::single(ray.clone()), res).rays, vec![vec![1.0, 0.0]]);
        }
        assert!(sphere_rays(&ConeUnion::single(PolyhedralCone::zero(2)), 90).is_empty());
        assert!(sphere_rays(&ConeUnion::single(PolyhedralCone::zero(3)), 10).is_empty());
    }

    #[test]
    fn half_plane_and_line() {
        let half = PolyhedralCone::from_halfspaces(2, vec![vec![1.0, 0.0]]).unwrap();
        let r = sphere_rays(&ConeUnion::single(half), 90);
        assert_eq!(r.len(), 181);
        assert!(r.rays.iter().all(|v| v[0] <= 1e-15));
        let line = PolyhedralCone::from_generators(2, vec![vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert_eq!(sphere_rays(&ConeUnion::single(line), 90).len(), 2);
        let plane = PolyhedralCone::full(2);
        assert_eq!(sphere_rays(&ConeUnion::single(plane), 90).len(), 360);
    }

    #[test]
    fn union_is_deduplicated() {
        let a = PolyhedralCone::nonnegative_orthant(2);
        let b = PolyhedralCone::from_generators(2, vec![vec![1.0, 0.0]]).unwrap();
        let r = sphere_rays(&ConeUnion { cones: vec![a, b] }, 90);
        assert_eq!(r.len(), 91);
    }

    #[test]
    fn three_dimensional_orthant() {
        let r = sphere_rays(&ConeUnion::single(PolyhedralCone::nonnegative_orthant(3)), 12);
        assert!(r.len() > 30);
        for v in &r.rays {
            assert!(v.iter().all(|&c| c >= -1e-12));
        }
        for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            assert!(r.rays.iter().any(|v| v.as_slice() == e));
        }
    }
}
