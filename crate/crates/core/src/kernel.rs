//! The kernel `{v in K∞ : f∞(v) = 0}` of a weakly homogeneous problem,
//! computed by minimizing `f∞` over a discretization of `K∞ ∩ S^{n-1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{margin_over, sphere_rays, ConeUnion, PolyhedralCone, RaySet};
use crate::problem::ProblemSpec;
use crate::vecops::{dist, dot, norm, normalized, scale};

pub const DEFAULT_RESOLUTION: usize = 90;
/// Margin required for interior membership in the kernel polar.
pub const DEFAULT_DELTA: f64 = 1e-6;
/// At most this many grid minima are refined.
const MAX_REFINED: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelClass {
    /// `f∞` takes negative values on `K∞`, so the asymptotic problem has no
    /// solution.
    Empty,
    /// `f∞ > 0` on `K∞ ∖ {0}`.
    Trivial,
    Nontrivial,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub classification: KernelClass,
    /// Smallest value of `f∞` on the unit sphere section of `K∞`.
    pub sphere_min: f64,
    pub argmin: Option<Vec<f64>>,
    /// Cluster representatives of the near-zero rays (Nontrivial) or the
    /// most negative rays (Empty); empty for Trivial.
    pub rays: Vec<Vec<f64>>,
    pub kernel_cone: PolyhedralCone,
    pub eps: f64,
    /// Largest `|f∞|` over the grid, used to scale `eps`.
    pub h_scale: f64,
    pub resolution: usize,
    pub grid_rays: usize,
    pub near_zero_rays: usize,
}

impl KernelReport {
    /// Unit rays spanning the fitted kernel cone, at the report's resolution.
    pub fn kernel_rays(&self) -> RaySet {
        sphere_rays(&ConeUnion::single(self.kernel_cone.clone()), self.resolution)
    }
}

fn slerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let theta = dot(a, b).clamp(-1.0, 1.0).acos();
    if theta < 1e-15 {
        return a.to_vec();
    }
    let s = theta.sin();
    let (wa, wb) = (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s);
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect();
    normalized(&v).unwrap_or_else(|| a.to_vec())
}

/// Golden-section search of `h` on the arc from `a` to `b`.
fn golden_on_arc(h: &Expr, a: &[f64], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let f = |t: f64| h.eval(&slerp(a, b, t)).ok();
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = slerp(a, b, t);
    let val = h.eval(&v).ok()?;
    Some((v, val))
}

fn tangent_basis(r: &[f64]) -> Vec<Vec<f64>> {
    let n = r.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut w = e;
        let c = dot(&w, r);
        for (wi, ri) in w.iter_mut().zip(r) {
            *wi -= c * ri;
        }
        for b in &basis {
            let c = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        if norm(&w) > 1e-6 {
            basis.push(normalized(&w).unwrap());
        }
        if basis.len() + 1 == n {
            break;
        }
    }
    basis
}

/// Pattern search of `h` on the sphere, staying inside `cone`.
fn sphere_pattern(h: &Expr, cone: &PolyhedralCone, start: &[f64], start_val: f64, step0: f64) -> (Vec<f64>, f64) {
    let mut r = start.to_vec();
    let mut val = start_val;
    let mut step = step0;
    while step > 1e-11 {
        let mut improved = false;
        for t in tangent_basis(&r) {
            for s in [step, -step] {
                let Some(c) = normalized(&r.iter().zip(&t).map(|(a, b)| a + s * b).collect::<Vec<_>>()) else {
                    continue;
                };
                if !cone.contains_tol(&c, 1e-12) {
                    continue;
                }
                if let Ok(v) = h.eval(&c) {
                    if v < val {
                        r = c;
                        val = v;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (r, val)
}

/// Connected components of `pts` under `dist <= link`.
fn clusters(pts: &[Vec<f64>], link: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; pts.len()];
    let mut out = Vec::new();
    for s in 0..pts.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            for j in 0..pts.len() {
                if !seen[j] && dist(&pts[i], &pts[j]) <= link {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Representatives of a cluster of rays: its best ray, the farthest pair,
/// and in three dimensions the members farthest from the plane of that
/// pair on either side.
fn representatives(pts: &[Vec<f64>], vals: &[f64], comp: &[usize]) -> Vec<usize> {
    let best = *comp
        .iter()
        .min_by(|&&a, &&b| vals[a].abs().total_cmp(&vals[b].abs()).then(a.cmp(&b)))
        .unwrap();
    if comp.len() == 1 {
        return vec![best];
    }
    let (mut p, mut q, mut far) = (comp[0], comp[0], -1.0);
    for (k, &i) in comp.iter().enumerate() {
        for &j in &comp[k + 1..] {
            let d = dist(&pts[i], &pts[j]);
            if d > far {
                far = d;
                p = i;
                q = j;
            }
        }
    }
    let mut reps = vec![p, q];
    if pts[p].len() == 3 {
        let c = [
            pts[p][1] * pts[q][2] - pts[p][2] * pts[q][1],
            pts[p][2] * pts[q][0] - pts[p][0] * pts[q][2],
            pts[p][0] * pts[q][1] - pts[p][1] * pts[q][0],
        ];
        let side = |i: usize| dot(&c, &pts[i]);
        let hi = comp.iter().copied().max_by(|&a, &b| side(a).total_cmp(&side(b))).unwrap();
        let lo = comp.iter().copied().min_by(|&a, &b| side(a).total_cmp(&side(b))).unwrap();
        for r in [hi, lo] {
            if side(r).abs() > 1e-9 && !reps.contains(&r) {
                reps.push(r);
            }
        }
    }
    if !reps.contains(&best) && far < 1e-9 {
        reps = vec![best];
    }
    reps
}

/// Minimize `h` over `cone ∩ S^{n-1}` and classify its zero set.
pub fn compute_kernel(h: &Expr, cone: &ConeUnion, resolution: usize) -> Result<KernelReport> {
    let dim = cone.dim();
    let rays = sphere_rays(cone, resolution);
    if rays.is_empty() {
        if cone.is_trivial() {
            // a bounded set: the asymptotic problem only has the origin
            return Ok(KernelReport {
                classification: KernelClass::Trivial,
                sphere_min: f64::INFINITY,
                argmin: None,
                rays: Vec::new(),
                kernel_cone: PolyhedralCone::zero(dim),
                eps: 1e-6,
                h_scale: 0.0,
                resolution,
                grid_rays: 0,
                near_zero_rays: 0,
            });
        }
        return Err(Error::EmptyRaySet);
    }
    let values: Vec<f64> = rays
        .rays
        .par_iter()
        .map(|v| h.eval(v))
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let h_scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = 1e-6 * h_scale.max(1.0);
    let spacing = rays.spacing;
    let link = if dim == 2 { 1.5 * spacing } else { 2.5 * spacing };

    // grid local minima, lowest first
    let mut minima: Vec<usize> = (0..rays.len())
        .filter(|&i| {
            (0..rays.len()).all(|j| {
                j == i
                    || rays.sources[j] != rays.sources[i]
                    || dist(&rays.rays[i], &rays.rays[j]) > link
                    || values[i] <= values[j]
            })
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(MAX_REFINED);

    let refined: Vec<(Vec<f64>, f64)> = minima
        .par_iter()
        .map(|&i| {
            let v = &rays.rays[i];
            let c = &cone.cones[rays.sources[i]];
            let mut best = (v.clone(), values[i]);
            if dim == 2 {
                let neighbours: Vec<usize> = (0..rays.len())
                    .filter(|&j| j != i && rays.sources[j] == rays.sources[i] && dist(v, &rays.rays[j]) <= link)
                    .collect();
                for j in neighbours {
                    if let Some((w, val)) = golden_on_arc(h, v, &rays.rays[j]) {
                        if val < best.1 {
                            best = (w, val);
                        }
                    }
                }
            } else {
                let (w, val) = sphere_pattern(h, c, v, values[i], spacing);
                if val < best.1 {
                    best = (w, val);
                }
            }
            best
        })
        .collect();

    let (argmin, sphere_min) = refined
        .iter()
        .cloned()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one grid minimum exists");

    let classification = if sphere_min < -eps {
        KernelClass::Empty
    } else if sphere_min > eps {
        KernelClass::Trivial
    } else {
        KernelClass::Nontrivial
    };

    let mut report_rays = Vec::new();
    let mut near_zero_rays = 0;
    let mut kernel_cone = PolyhedralCone::zero(dim);
    match classification {
        KernelClass::Trivial => {}
        KernelClass::Empty => {
            report_rays = refined
                .iter()
                .filter(|(_, v)| *v < -eps)
                .take(4)
                .map(|(r, _)| r.clone())
                .collect();
        }
        KernelClass::Nontrivial => {
            let mut pts: Vec<Vec<f64>> = Vec::new();
            let mut vals: Vec<f64> = Vec::new();
            for (r, v) in &refined {
                if v.abs() <= eps {
                    pts.push(r.clone());
                    vals.push(*v);
                }
            }
            for (r, &v) in rays.rays.iter().zip(&values) {
                if v.abs() <= eps {
                    pts.push(r.clone());
                    vals.push(v);
                }
            }
            near_zero_rays = values.iter().filter(|v| v.abs() <= eps).count();
            for comp in clusters(&pts, link) {
                for i in representatives(&pts, &vals, &comp) {
                    if !report_rays.iter().any(|r: &Vec<f64>| dist(r, &pts[i]) < 1e-9) {
                        report_rays.push(pts[i].clone());
                    }
                }
            }
            kernel_cone = PolyhedralCone::from_generators(dim, report_rays.clone())?;
        }
    }
    Ok(KernelReport {
        classification,
        sphere_min,
        argmin: Some(argmin),
        rays: report_rays,
        kernel_cone,
        eps,
        h_scale,
        resolution,
        grid_rays: rays.len(),
        near_zero_rays,
    })
}

/// Kernel of the problem's declared asymptotic function over its
/// asymptotic cone.
pub fn compute_problem_kernel(p: &ProblemSpec, resolution: usize) -> Result<KernelReport> {
    let h = p.asymptotic_fn()?;
    let cone = p.set.asymptotic_cone()?;
    compute_kernel(h.expr(), &cone, resolution)
}

/// `-max <u, v>` over the kernel rays; `+inf` for a trivial kernel. `u` is
/// interior to the kernel polar when this exceeds the margin `delta`.
pub fn kernel_polar_interior_contains(report: &KernelReport, u: &[f64]) -> Result<f64> {
    match report.classification {
        KernelClass::Empty => Err(Error::KernelEmpty),
        KernelClass::Trivial => Ok(f64::INFINITY),
        KernelClass::Nontrivial => {
            let extra = report.kernel_rays();
            Ok(margin_over(report.rays.iter().chain(extra.rays.iter()), u))
        }
    }
}

/// Scale-free angular distance of `v` from the nearest reported ray.
pub fn distance_to_rays(rays: &[Vec<f64>], v: &[f64]) -> f64 {
    let Some(u) = normalized(v) else { return 0.0 };
    rays.iter()
        .map(|r| dist(&u, r))
        .fold(f64::INFINITY, f64::min)
}

/// `u - t * v` for a kernel ray `v`, used to test monotonicity of the
/// kernel route.
pub fn shifted_along(u: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    u.iter().zip(scale(v, t)).map(|(a, b)| a - b).collect()
}
