//! Sweeps over the linear shift `u`, and the computable shadow of upper
//! semicontinuity of `S(u) = Sol(K, f_u)`: local boundedness and a
//! closed-graph check.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{check_little_o, LITTLE_O_SCALES};
use crate::certificates::{CertificateKind, CertifyConfig, ParametricCertificate, ParametricContext};
use crate::error::{Error, Result};
use crate::expr::{Expr, SmoothFn};
use crate::kernel::{compute_problem_kernel, distance_to_rays, KernelClass};
use crate::problem::ProblemSpec;
use crate::solver::{minty_check, solve_expanding, solve_truncated, MintyResult, SolveStatus, SolverConfig};
use crate::vecops::{dist, norm, normalized};
use crate::verdict::ValidationVerdict;

/// How a grid point relates to `R(K,f)`, the set of `u` with a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExistenceLabel {
    /// A route certified a nonempty compact solution set.
    Certified,
    /// A solution was found and a flat ray from it was verified.
    UnboundedSolutionSet,
    /// The solver converged but no route certified.
    SolvedOnly,
    Escaping,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub u: Vec<f64>,
    pub kernel_margin: Option<f64>,
    pub domain_route: CertificateKind,
    pub status: SolveStatus,
    pub norm: Option<f64>,
    pub value: Option<f64>,
    pub final_radius: f64,
    pub label: ExistenceLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    #[serde(skip)]
    pub certificate: Option<ParametricCertificate>,
}

impl SweepRecord {
    fn from_certificate(c: ParametricCertificate, runtime_ms: Option<f64>) -> Self {
        let s = &c.solve;
        let label = if c.kernel_route.certified() || c.domain_route.certified() {
            ExistenceLabel::Certified
        } else if c.unbounded.is_some() {
            ExistenceLabel::UnboundedSolutionSet
        } else {
            match s.status {
                SolveStatus::Converged => ExistenceLabel::SolvedOnly,
                SolveStatus::Escaping => ExistenceLabel::Escaping,
                SolveStatus::Indeterminate => ExistenceLabel::Indeterminate,
            }
        };
        SweepRecord {
            u: c.u.clone(),
            kernel_margin: c.kernel_margin,
            domain_route: c.domain_route.kind,
            status: s.status,
            norm: s.x.as_deref().map(norm),
            value: s.value,
            final_radius: s.final_radius,
            label,
            runtime_ms,
            certificate: Some(c),
        }
    }
}

/// All points of the product grid, first axis slowest.
pub fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

/// Both parametric routes and the expanding solver at every grid point.
/// Records come back in grid order; `timings` adds wall-clock runtimes,
/// which makes the output run-dependent.
pub fn sweep(p: &ProblemSpec, grid: &[Vec<f64>], cfg: &CertifyConfig, timings: bool) -> Result<Vec<SweepRecord>> {
    if let Some(u) = grid.iter().find(|u| u.len() != p.n) {
        return Err(Error::Precondition(format!("grid point {u:?} does not have {} entries", p.n)));
    }
    let ctx = ParametricContext::new(p, cfg)?;
    grid.par_iter()
        .map(|u| {
            let start = Instant::now();
            let c = ctx.certify(u)?;
            let ms = timings.then(|| start.elapsed().as_secs_f64() * 1e3);
            Ok(SweepRecord::from_certificate(c, ms))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessSample {
    pub u: Vec<f64>,
    pub status: SolveStatus,
    pub norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: Vec<BoundednessSample>,
    /// Largest solution norm when every sample converged.
    pub sup_norm: Option<f64>,
    pub unbounded: bool,
    pub claim: Option<String>,
}

/// Solve at `m` seeded points of the ball `B(center, radius)` and report
/// the largest solution norm. Any escaping sample raises the unbounded
/// flag; mixed outcomes yield no claim.
pub fn local_boundedness_probe<R: Rng>(
    p: &ProblemSpec,
    center: &[f64],
    radius: f64,
    m: usize,
    solver: &SolverConfig,
    rng: &mut R,
) -> Result<BoundednessReport> {
    p.require_parametric_degree()?;
    if center.len() != p.n {
        return Err(Error::Precondition(format!("center has {} entries, expected {}", center.len(), p.n)));
    }
    let n = p.n;
    let us: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let d = normalized(&d).unwrap_or_else(|| vec![0.0; n]);
            let r = radius * rng.random_range(0.0f64..1.0).powf(1.0 / n as f64);
            center.iter().zip(&d).map(|(c, di)| c + r * di).collect()
        })
        .collect();
    let kernel = compute_problem_kernel(p, crate::kernel::DEFAULT_RESOLUTION).ok();
    let samples = us
        .par_iter()
        .map(|u| {
            let o = solve_expanding(p, u, solver, kernel.as_ref())?;
            Ok(BoundednessSample {
                u: u.clone(),
                status: o.status,
                norm: o.x.as_deref().map(norm),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let unbounded = samples.iter().any(|s| s.status == SolveStatus::Escaping);
    let all_converged = samples.iter().all(|s| s.status == SolveStatus::Converged);
    let sup_norm = all_converged.then(|| samples.iter().filter_map(|s| s.norm).fold(0.0, f64::max));
    let claim = match (unbounded, sup_norm) {
        (true, _) => Some("a sampled shift escapes: S is not locally bounded here".to_string()),
        (false, Some(s)) => Some(format!("solutions over the sampled ball stay within norm {s}")),
        (false, None) => None,
    };
    Ok(BoundednessReport {
        center: center.to_vec(),
        radius,
        samples,
        sup_norm,
        unbounded,
        claim,
    })
}

/// Given solutions `x_k` at shifts `u_k` converging to `(u_bar, x_bar)`,
/// check that `x_bar` is feasible, is no worse for `f_{u_bar}` than the
/// sequence and sampled members, and passes the variational check.
pub fn closed_graph_check<R: Rng>(
    p: &ProblemSpec,
    sequence: &[(Vec<f64>, Vec<f64>)],
    u_bar: &[f64],
    x_bar: &[f64],
    rng: &mut R,
) -> Result<ValidationVerdict> {
    let mut verdict = ValidationVerdict::new(
        "closed_graph",
        json!({"u_bar": u_bar, "x_bar": x_bar, "sequence_length": sequence.len()}),
    );
    if !p.set.contains(x_bar) {
        verdict.fail(x_bar, f64::NAN, "limit point is infeasible");
        return Ok(verdict);
    }
    let f_bar = p.shifted_objective(u_bar)?;
    let value = f_bar.eval(x_bar)?;
    let tol = 1e-9 * (1.0 + value.abs());
    let mut table = Vec::new();
    for (u, x) in sequence {
        let f_u = p.shifted_objective(u)?;
        let pre = minty_check(&f_u, &p.set, x, 200, rng).passed();
        table.push(json!({"u": u, "x": x, "distance_to_limit": dist(x, x_bar), "solution_check": pre}));
        if pre == Some(false) {
            verdict.fail(x, f64::NAN, "sequence point fails the variational check at its own shift");
        }
    }
    let probes = sequence
        .iter()
        .map(|(_, x)| x.clone())
        .chain(p.set.sample_members(rng, 2.0 * (1.0 + norm(x_bar)), 500));
    let mut worst = 0.0f64;
    for y in probes {
        if let Ok(fy) = f_bar.eval(&y) {
            worst = worst.max(value - fy);
            if fy < value - tol {
                verdict.fail(&y, value - fy, "a member does better than the limit point");
            }
        }
    }
    verdict.statistic = worst;
    if let MintyResult::Checked(v) = minty_check(&f_bar, &p.set, x_bar, 500, rng) {
        if !v.pass {
            verdict.fail(x_bar, v.statistic, "limit point fails the variational check");
        }
    }
    verdict.table = Some(serde_json::Value::Array(table));
    Ok(verdict)
}

pub const INCLUSION_RADII: [f64; 2] = [1e2, 1e3];
pub const INCLUSION_TOL: f64 = 1e-2;

/// For a cone `K` and perturbations `p_i = o(|x|^alpha)` along `K`, large
/// minimizers of `f + p_i` over `K ∩ B(0, k)` should point into the
/// kernel. Vacuous when every minimizer stays small.
pub fn perturbation_inclusion_test(p: &ProblemSpec, perturbations: &[Expr], resolution: usize) -> Result<ValidationVerdict> {
    if !p.set.is_cone() {
        return Err(Error::ConePrecondition);
    }
    let cone = p.set.asymptotic_cone()?;
    let kernel = compute_problem_kernel(p, resolution)?;
    let mut rays = kernel.rays.clone();
    if kernel.classification == KernelClass::Nontrivial {
        rays.extend(kernel.kernel_rays().rays);
    }
    let mut verdict = ValidationVerdict::new(
        "perturbation_inclusion",
        json!({"radii": INCLUSION_RADII, "tolerance": INCLUSION_TOL, "perturbations": perturbations.len()}),
    );
    let zero = Expr::constant(0.0);
    let mut table = Vec::new();
    for (i, q) in perturbations.iter().enumerate() {
        let small = check_little_o(q, &zero, p.alpha, &p.set, &cone, resolution, &LITTLE_O_SCALES)?;
        if !small.pass {
            return Err(Error::Precondition(format!("perturbation {i} is not o(|x|^alpha) along K")));
        }
        let g = SmoothFn::new(Expr::add(vec![p.objective.expr().clone(), q.clone()]), p.n)?;
        let extra: Vec<Vec<f64>> = p.feasible_start.iter().cloned().collect();
        for k in INCLUSION_RADII {
            let s = solve_truncated(&g, &p.set, k, &extra, &SolverConfig::default())?;
            let size = norm(&s.x);
            let d = (size >= INCLUSION_RADII[0]).then(|| distance_to_rays(&rays, &s.x));
            table.push(json!({"perturbation": i, "radius": k, "x": s.x, "norm": size, "kernel_distance": d}));
            if let Some(d) = d {
                verdict.observe(d);
                if d > INCLUSION_TOL {
                    verdict.fail(&s.x, d, format!("large minimizer of perturbation {i} points away from the kernel"));
                }
            }
        }
    }
    verdict.table = Some(serde_json::Value::Array(table));
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_row_major() {
        let g = grid_points(&[vec![1.0, 2.0], vec![10.0, 20.0, 30.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![1.0, 10.0]);
        assert_eq!(g[2], vec![1.0, 30.0]);
        assert_eq!(g[3], vec![2.0, 10.0]);
    }
}
