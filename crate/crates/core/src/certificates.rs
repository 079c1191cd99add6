//! Existence certificates. Each carries the hypothesis verdicts it relied
//! on and the witnesses behind its conclusion; a failed search yields
//! `NotCertified`, never a refutation, except where a flat ray from a
//! computed minimizer is verified directly.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    check_little_o, check_positive_homogeneity, check_pseudoconvexity, lower_bound_probe, LowerBound, Region,
    HOMOGENEITY_SCALES, LITTLE_O_SCALES, LOWER_BOUND_SCALES,
};
use crate::error::{Error, Result};
use crate::expr::{Expr, SmoothFn};
use crate::geometry::project::Ball;
use crate::geometry::{convexity_midpoint_check, sphere_rays, SetDescription};
use crate::kernel::{compute_problem_kernel, kernel_polar_interior_contains, KernelClass, KernelReport};
use crate::problem::ProblemSpec;
use crate::search::{pattern_search, PatternConfig};
use crate::solver::{solve_expanding, truncation_seeds, SolveOutcome, SolveStatus, SolverConfig};
use crate::vecops::{axpy, better, dist, dot, norm};
use crate::verdict::ValidationVerdict;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyConfig {
    pub resolution: usize,
    pub delta: f64,
    /// Witnesses are searched in `K ∩ B(0, radius)`.
    pub radius: f64,
    pub samples: usize,
    pub pairs: usize,
    /// Half-width of the box in which pseudoconvexity is sampled.
    pub pseudoconvexity_box: f64,
    /// Overrides the problem file's seed.
    pub seed: Option<u64>,
    pub solver: SolverConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            resolution: crate::kernel::DEFAULT_RESOLUTION,
            delta: crate::kernel::DEFAULT_DELTA,
            radius: 1e3,
            samples: 200,
            pairs: 200,
            pseudoconvexity_box: 100.0,
            seed: None,
            solver: SolverConfig::default(),
        }
    }
}

impl CertifyConfig {
    fn rng(&self, p: &ProblemSpec) -> ChaCha8Rng {
        p.rng(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    TrivialKernel,
    PseudoconvexConditionA,
    KernelPolarRoute,
    DomainInterior,
    UnboundedSolutionSet,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub ray: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub margin: f64,
    /// The margin recomputed with finite-difference gradients.
    pub fd_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub hypotheses: Vec<ValidationVerdict>,
    pub witnesses: Vec<Witness>,
    pub conclusion: String,
    pub parameters: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelReport>,
}

impl Certificate {
    fn new(kind: CertificateKind, hypotheses: Vec<ValidationVerdict>, conclusion: impl Into<String>, parameters: Value) -> Self {
        Certificate {
            kind,
            hypotheses,
            witnesses: Vec::new(),
            conclusion: conclusion.into(),
            parameters,
            kernel: None,
        }
    }

    pub fn certified(&self) -> bool {
        self.kind != CertificateKind::NotCertified
    }

    /// Smallest witness margin, `+inf` without witnesses.
    pub fn margin(&self) -> f64 {
        self.witnesses.iter().map(|w| w.margin).fold(f64::INFINITY, f64::min)
    }
}

fn all_pass(v: &[ValidationVerdict]) -> bool {
    v.iter().all(|v| v.pass)
}

fn failed_names(v: &[ValidationVerdict]) -> String {
    v.iter().filter(|v| !v.pass).map(|v| v.check.as_str()).collect::<Vec<_>>().join(", ")
}

/// Homogeneity on the ambient cone and the little-o condition along `K∞`.
pub fn asymptotic_hypotheses(p: &ProblemSpec, cfg: &CertifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<ValidationVerdict>> {
    let h = p.asymptotic_fn()?;
    let cone = p.set.asymptotic_cone()?;
    let homogeneity = check_positive_homogeneity(h.expr(), p.alpha, &p.set.ambient, rng, cfg.samples, &HOMOGENEITY_SCALES)?;
    let little_o = if cone.is_trivial() {
        ValidationVerdict::new("little_o", json!({"note": "asymptotic cone is {0}; nothing to check"}))
    } else {
        check_little_o(p.objective.expr(), h.expr(), p.alpha, &p.set, &cone, cfg.resolution, &LITTLE_O_SCALES)?
    };
    Ok(vec![homogeneity, little_o])
}

/// Convexity of `K` (asserted and midpoint-sampled) and pseudoconvexity of
/// `f` on sampled members.
fn convexity_hypotheses(p: &ProblemSpec, cfg: &CertifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<ValidationVerdict>> {
    let mut asserted = ValidationVerdict::new("convexity_assertion", json!({"convex": p.set.convex}));
    if !p.set.convex {
        asserted.pass = false;
    }
    let midpoints = convexity_midpoint_check(&p.set, rng, cfg.pairs, cfg.radius);
    let b = cfg.pseudoconvexity_box;
    let lo = if orthant(&p.set) { vec![0.0; p.n] } else { vec![-b; p.n] };
    let region = Region {
        lo,
        hi: vec![b; p.n],
        within: Some(&p.set),
    };
    let pseudo = check_pseudoconvexity(&p.objective, &region, rng, cfg.pairs)?;
    Ok(vec![asserted, midpoints, pseudo])
}

fn orthant(set: &SetDescription) -> bool {
    set.ambient
        .generators()
        .is_ok_and(|g| g.iter().all(|v| v.iter().all(|&c| c >= 0.0)))
}

/// Central differences, falling back to one-sided ones at domain edges.
fn fd_gradient(f: &Expr, x: &[f64]) -> Option<Vec<f64>> {
    let f0 = f.eval(x).ok()?;
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[i] += s;
                f.eval(&y).ok()
            };
            match (at(h), at(-h)) {
                (Some(a), Some(b)) => Some((a - b) / (2.0 * h)),
                (Some(a), None) => Some((a - f0) / h),
                (None, Some(b)) => Some((f0 - b) / h),
                (None, None) => None,
            }
        })
        .collect()
}

/// Feasible points in `K ∩ B(0, R)` with their gradients, shared by all
/// ray searches.
struct WitnessPool<'a> {
    f: &'a SmoothFn,
    set: &'a SetDescription,
    radius: f64,
    points: Vec<(Vec<f64>, Vec<f64>)>,
}

impl<'a> WitnessPool<'a> {
    fn new(f: &'a SmoothFn, set: &'a SetDescription, radius: f64, start: Option<&Vec<f64>>, rng: &mut ChaCha8Rng) -> Self {
        let mut candidates = truncation_seeds(set, radius, &start.into_iter().cloned().collect::<Vec<_>>(), 32);
        candidates.extend(set.sample_members(rng, radius, 500));
        for r in [radius / 100.0, radius / 10.0, radius] {
            candidates.extend(set.shell_members(r, None));
        }
        let points = candidates
            .into_iter()
            .filter(|x| norm(x) <= radius * (1.0 + 1e-12))
            .filter_map(|x| f.gradient(&x).ok().map(|g| (x, g)))
            .collect();
        WitnessPool { f, set, radius, points }
    }

    fn pairing(g: &[f64], u: &[f64], v: &[f64]) -> f64 {
        dot(g, v) - dot(u, v)
    }

    /// Largest `<∇f(x) - u, v>` found. With `polish_below = Some(t)`, pattern
    /// search only runs when the pool's best is under `t`.
    fn best(&self, u: &[f64], v: &[f64], polish_below: Option<f64>) -> Option<(Vec<f64>, f64)> {
        let mut scored: Vec<(f64, &Vec<f64>)> = self
            .points
            .iter()
            .map(|(x, g)| (-Self::pairing(g, u, v), x))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| crate::vecops::lex_cmp(a.1, b.1)));
        let (top, top_x) = scored.first().map(|(s, x)| (-*s, (*x).clone()))?;
        if polish_below.is_some_and(|t| top >= t) {
            return Some((top_x, top));
        }
        let objective = |x: &[f64]| -> Option<f64> {
            if norm(x) > self.radius * (1.0 + 1e-12) || !self.set.contains(x) {
                return None;
            }
            self.f.gradient(x).ok().map(|g| -Self::pairing(&g, u, v))
        };
        let origin = vec![0.0; v.len()];
        let ball = Ball {
            center: &origin,
            radius: self.radius,
        };
        let repair = |x: &[f64]| self.set.project_into(x, Some(&ball));
        let cfg = PatternConfig {
            initial_step: self.radius / 100.0,
            min_step: 1e-9 * self.radius,
            max_evals: 5000,
            diagonals: true,
        };
        let mut best = (-top, top_x);
        for (s, x) in scored.iter().take(3) {
            let r = pattern_search(&objective, &repair, x, *s, &cfg);
            if better(r.value, &r.x, best.0, &best.1) {
                best = (r.value, r.x);
            }
        }
        Some((best.1, -best.0))
    }

    /// A witness for ray `v` if the best point clears `delta` and the
    /// finite-difference recomputation clears `delta / 2`.
    fn witness(&self, u: &[f64], v: &[f64], delta: f64, polish: bool) -> (Option<Witness>, f64) {
        let Some((x, margin)) = self.best(u, v, (!polish).then_some(delta)) else {
            return (None, f64::NEG_INFINITY);
        };
        let fd = fd_gradient(self.f.expr(), &x).map(|g| Self::pairing(&g, u, v));
        let ok = margin >= delta && fd.is_some_and(|m| m >= delta / 2.0);
        let w = Witness {
            ray: v.to_vec(),
            point: Some(x),
            margin,
            fd_margin: fd,
        };
        (ok.then_some(w), margin)
    }
}

fn dedup_rays(rays: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rays {
        if !out.iter().any(|q| dist(q, &r) < 1e-9) {
            out.push(r);
        }
    }
    out
}

/// Largest increase of `f_u` along `x̄ + t v`, `t ∈ {1, 10, 100}`; `None`
/// if a point leaves `K` or cannot be evaluated.
pub fn ray_flatness(f_u: &SmoothFn, set: &SetDescription, xbar: &[f64], v: &[f64]) -> Option<f64> {
    let f0 = f_u.eval(xbar).ok()?;
    let mut worst = f64::NEG_INFINITY;
    for t in [1.0, 10.0, 100.0] {
        let y = axpy(xbar, t, v);
        if !set.contains(&y) {
            return None;
        }
        worst = worst.max(f_u.eval(&y).ok()? - f0);
    }
    Some(worst)
}

fn is_flat(increase: f64, f0: f64) -> bool {
    increase <= 1e-9 * (1.0 + f0.abs())
}

/// The trivial-kernel theorem: a validated asymptotic function whose zero
/// set in `K∞` is `{0}` gives a nonempty bounded solution set.
pub fn certify_trivial_kernel(p: &ProblemSpec, cfg: &CertifyConfig) -> Result<Certificate> {
    let mut rng = cfg.rng(p);
    let hyps = asymptotic_hypotheses(p, cfg, &mut rng)?;
    let report = compute_problem_kernel(p, cfg.resolution)?;
    let params = json!({"resolution": cfg.resolution, "eps": report.eps});
    let mut c = if !all_pass(&hyps) {
        let failed = failed_names(&hyps);
        Certificate::new(CertificateKind::NotCertified, hyps, format!("hypotheses failed: {failed}"), params)
    } else {
        match report.classification {
            KernelClass::Trivial => {
                let mut c = Certificate::new(
                    CertificateKind::TrivialKernel,
                    hyps,
                    "Sol(K,f) is nonempty and bounded",
                    params,
                );
                if let Some(v) = &report.argmin {
                    c.witnesses.push(Witness {
                        ray: v.clone(),
                        point: None,
                        margin: report.sphere_min,
                        fd_margin: None,
                    });
                }
                c
            }
            KernelClass::Empty => Certificate::new(
                CertificateKind::NotCertified,
                hyps,
                "kernel is empty: f∞ is negative somewhere on K∞, so Sol(K,f) = ∅",
                params,
            ),
            KernelClass::Nontrivial => Certificate::new(
                CertificateKind::NotCertified,
                hyps,
                "kernel is nontrivial; the trivial-kernel theorem does not apply",
                params,
            ),
        }
    };
    c.kernel = Some(report);
    Ok(c)
}

/// Kernel rays: the cluster representatives plus the fitted cone's rays.
fn report_rays(report: &KernelReport) -> Vec<Vec<f64>> {
    let mut rays = report.rays.clone();
    rays.extend(report.kernel_rays().rays);
    dedup_rays(rays)
}

/// Condition (a) for convex `K` and pseudoconvex `f`: every kernel ray `v`
/// has a point with `<∇f(x), v> > 0`. If a ray has none, try to show the
/// solution set contains a ray from a computed minimizer.
pub fn certify_condition_a(p: &ProblemSpec, cfg: &CertifyConfig) -> Result<Certificate> {
    let mut rng = cfg.rng(p);
    let report = compute_problem_kernel(p, cfg.resolution)?;
    if report.classification == KernelClass::Trivial {
        return Err(Error::Precondition(
            "the kernel is trivial; use the trivial-kernel certificate".into(),
        ));
    }
    let mut hyps = asymptotic_hypotheses(p, cfg, &mut rng)?;
    hyps.extend(convexity_hypotheses(p, cfg, &mut rng)?);
    let params = json!({"radius": cfg.radius, "delta": cfg.delta, "resolution": cfg.resolution});
    if report.classification == KernelClass::Empty {
        let mut c = Certificate::new(
            CertificateKind::NotCertified,
            hyps,
            "kernel is empty: f∞ is negative somewhere on K∞, so Sol(K,f) = ∅",
            params,
        );
        c.kernel = Some(report);
        return Ok(c);
    }
    if !all_pass(&hyps) {
        let failed = failed_names(&hyps);
        let mut c = Certificate::new(CertificateKind::NotCertified, hyps, format!("hypotheses failed: {failed}"), params);
        c.kernel = Some(report);
        return Ok(c);
    }
    let rays = report_rays(&report);
    let pool = WitnessPool::new(&p.objective, &p.set, cfg.radius, p.feasible_start.as_ref(), &mut rng);
    let zero = vec![0.0; p.n];
    let found: Vec<(Option<Witness>, f64)> = rays.par_iter().map(|v| pool.witness(&zero, v, cfg.delta, true)).collect();
    let mut c = Certificate::new(CertificateKind::NotCertified, hyps, "", params);
    c.kernel = Some(report.clone());
    match found.iter().position(|(w, _)| w.is_none()) {
        None => {
            c.kind = CertificateKind::PseudoconvexConditionA;
            c.conclusion = "Sol(K,f) is nonempty and compact".into();
            c.witnesses = found.into_iter().filter_map(|(w, _)| w).collect();
        }
        Some(i) => {
            let (v, best_margin) = (&rays[i], found[i].1);
            let solved = solve_expanding(p, &zero, &cfg.solver, Some(&report))?;
            let flat = solved.x.as_ref().zip(solved.value).and_then(|(x, f0)| {
                ray_flatness(&p.objective, &p.set, x, v).filter(|&inc| is_flat(inc, f0)).map(|inc| (x.clone(), inc))
            });
            let Some((xbar, increase)) = flat else {
                return Err(Error::SearchInconclusive {
                    ray: v.clone(),
                    best_margin,
                });
            };
            c.kind = CertificateKind::UnboundedSolutionSet;
            c.conclusion = format!("Sol(K,f) is unbounded: it contains the ray x̄ + t·{v:?} from x̄ = {xbar:?}");
            c.witnesses.push(Witness {
                ray: v.clone(),
                point: Some(xbar),
                margin: -increase,
                fd_margin: None,
            });
            c.parameters["best_margin"] = json!(best_margin);
        }
    }
    Ok(c)
}

/// Searches every ray of `K∞` for a point with `<∇f(x) - u, v> >= delta`.
/// Returns the certificate and the unwitnessed rays with their best margin.
fn domain_search(
    pool: &WitnessPool<'_>,
    rays: &[Vec<f64>],
    u: &[f64],
    cfg: &CertifyConfig,
) -> (Certificate, Vec<(Vec<f64>, f64)>) {
    let params = json!({"u": u, "radius": cfg.radius, "delta": cfg.delta, "rays": rays.len()});
    if rays.is_empty() {
        let c = Certificate::new(CertificateKind::DomainInterior, Vec::new(), "K∞ = {0}: vacuously u ∈ int D(K,f)", params);
        return (c, Vec::new());
    }
    let found: Vec<(Option<Witness>, f64)> = rays.par_iter().map(|v| pool.witness(u, v, cfg.delta, false)).collect();
    let misses: Vec<(Vec<f64>, f64)> = found
        .iter()
        .zip(rays)
        .filter(|((w, _), _)| w.is_none())
        .map(|((_, m), v)| (v.clone(), *m))
        .collect();
    let mut c = Certificate::new(CertificateKind::NotCertified, Vec::new(), "", params);
    if misses.is_empty() {
        c.kind = CertificateKind::DomainInterior;
        c.conclusion = "u ∈ int D(K,f)".into();
        c.witnesses = found.into_iter().filter_map(|(w, _)| w).collect();
    } else {
        c.conclusion = format!(
            "no witness within B(0, {}) for {} of {} rays (truncated search, not a refutation)",
            cfg.radius,
            misses.len(),
            rays.len()
        );
        c.parameters["unwitnessed"] = json!(misses.iter().map(|(v, m)| json!({"ray": v, "best_margin": m})).collect::<Vec<_>>());
    }
    (c, misses)
}

/// Interior membership of `u` in `D(K,f) = ∇f(K) + (K∞)*`: every ray of
/// `K∞` has a witness `x ∈ K ∩ B(0, R)` with `<∇f(x) - u, v> >= delta`.
pub fn domain_interior_contains(p: &ProblemSpec, u: &[f64], cfg: &CertifyConfig) -> Result<Certificate> {
    if u.len() != p.n {
        return Err(Error::Precondition(format!("u has {} entries, expected {}", u.len(), p.n)));
    }
    let mut rng = cfg.rng(p);
    let cone = p.set.asymptotic_cone()?;
    let rays = sphere_rays(&cone, cfg.resolution).rays;
    let pool = WitnessPool::new(&p.objective, &p.set, cfg.radius, p.feasible_start.as_ref(), &mut rng);
    Ok(domain_search(&pool, &rays, u, cfg).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ParametricCertificate {
    pub u: Vec<f64>,
    /// The strongest certified statement.
    pub kind: CertificateKind,
    pub conclusion: String,
    pub kernel_margin: Option<f64>,
    pub kernel_route: Certificate,
    pub domain_route: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unbounded: Option<Certificate>,
    pub solve: SolveOutcome,
}

/// Everything in the parametric routes that does not depend on `u`.
pub struct ParametricContext<'a> {
    p: &'a ProblemSpec,
    cfg: CertifyConfig,
    pub kernel: KernelReport,
    pub lower_bound: LowerBound,
    asymptotic: Vec<ValidationVerdict>,
    convexity: Vec<ValidationVerdict>,
    rays: Vec<Vec<f64>>,
    pool: WitnessPool<'a>,
}

impl<'a> ParametricContext<'a> {
    pub fn new(p: &'a ProblemSpec, cfg: &CertifyConfig) -> Result<Self> {
        p.require_parametric_degree()?;
        let mut rng = cfg.rng(p);
        let kernel = compute_problem_kernel(p, cfg.resolution)?;
        let asymptotic = asymptotic_hypotheses(p, cfg, &mut rng)?;
        let lower_bound = lower_bound_probe(&p.objective, &p.set, p.feasible_start.as_deref(), &mut rng, &LOWER_BOUND_SCALES)?;
        let convexity = convexity_hypotheses(p, cfg, &mut rng)?;
        let cone = p.set.asymptotic_cone()?;
        let rays = sphere_rays(&cone, cfg.resolution).rays;
        let pool = WitnessPool::new(&p.objective, &p.set, cfg.radius, p.feasible_start.as_ref(), &mut rng);
        Ok(ParametricContext {
            p,
            cfg: *cfg,
            kernel,
            lower_bound,
            asymptotic,
            convexity,
            rays,
            pool,
        })
    }

    fn lower_bound_verdict(&self) -> ValidationVerdict {
        let mut v = ValidationVerdict::new("lower_bound", json!(self.lower_bound));
        if let LowerBound::Unbounded { drop, at, .. } = &self.lower_bound {
            v.fail(at, *drop, "f drops without bound along sampled members");
        }
        v
    }

    fn kernel_route(&self, u: &[f64]) -> (Certificate, Option<f64>) {
        let mut hyps = self.asymptotic.clone();
        hyps.push(self.lower_bound_verdict());
        let params = json!({"u": u, "delta": self.cfg.delta});
        let margin = match kernel_polar_interior_contains(&self.kernel, u) {
            Ok(m) => m,
            Err(_) => {
                let c = Certificate::new(CertificateKind::NotCertified, hyps, "kernel is empty, so Sol(K,f_u) = ∅", params);
                return (c, None);
            }
        };
        let mut c = Certificate::new(CertificateKind::NotCertified, hyps, "", params);
        if !all_pass(&c.hypotheses) {
            c.conclusion = format!("hypotheses failed: {}", failed_names(&c.hypotheses));
        } else if margin > self.cfg.delta {
            c.kind = CertificateKind::KernelPolarRoute;
            c.conclusion = "u ∈ int K(K,f)*, so Sol(K,f_u) is nonempty and compact".into();
            let rays = report_rays(&self.kernel);
            if let Some(v) = rays.iter().max_by(|a, b| dot(u, a).total_cmp(&dot(u, b))) {
                c.witnesses.push(Witness {
                    ray: v.clone(),
                    point: None,
                    margin,
                    fd_margin: None,
                });
            }
        } else {
            c.conclusion = format!("kernel margin {margin} does not exceed delta; u is not interior to K(K,f)*");
        }
        (c, Some(margin))
    }

    pub fn certify(&self, u: &[f64]) -> Result<ParametricCertificate> {
        let p = self.p;
        let (kernel_route, kernel_margin) = self.kernel_route(u);
        let (mut domain_route, misses) = domain_search(&self.pool, &self.rays, u, &self.cfg);
        domain_route.hypotheses = self.convexity.clone();
        if domain_route.certified() && !all_pass(&domain_route.hypotheses) {
            domain_route.kind = CertificateKind::NotCertified;
            domain_route.conclusion = format!(
                "u ∈ int D(K,f) but hypotheses failed: {}",
                failed_names(&domain_route.hypotheses)
            );
        } else if domain_route.certified() {
            domain_route.conclusion = "u ∈ int D(K,f), so Sol(K,f_u) is nonempty and compact".into();
        }
        let solve = solve_expanding(p, u, &self.cfg.solver, Some(&self.kernel))?;
        let mut unbounded = None;
        if !domain_route.certified() && all_pass(&self.convexity) && solve.status == SolveStatus::Converged {
            let f_u = p.shifted_objective(u)?;
            let xbar = solve.x.clone().expect("converged outcomes carry a point");
            let f0 = solve.value.expect("converged outcomes carry a value");
            for (v, best_margin) in &misses {
                if *best_margin > 0.0 {
                    continue;
                }
                if let Some(inc) = ray_flatness(&f_u, &p.set, &xbar, v).filter(|&inc| is_flat(inc, f0)) {
                    let mut c = Certificate::new(
                        CertificateKind::UnboundedSolutionSet,
                        self.convexity.clone(),
                        format!("u ∉ int D(K,f) yet Sol(K,f_u) ≠ ∅: it contains the ray x̄ + t·{v:?}"),
                        json!({"u": u, "best_margin": best_margin}),
                    );
                    c.witnesses.push(Witness {
                        ray: v.clone(),
                        point: Some(xbar.clone()),
                        margin: -inc,
                        fd_margin: None,
                    });
                    unbounded = Some(c);
                    break;
                }
            }
        }
        let (kind, conclusion) = if kernel_route.certified() {
            (kernel_route.kind, "Sol(K,f_u) is nonempty and compact")
        } else if domain_route.certified() {
            (domain_route.kind, "Sol(K,f_u) is nonempty and compact")
        } else if let Some(c) = &unbounded {
            (c.kind, "Sol(K,f_u) is nonempty and unbounded")
        } else {
            (CertificateKind::NotCertified, "no route certified")
        };
        Ok(ParametricCertificate {
            u: u.to_vec(),
            kind,
            conclusion: conclusion.into(),
            kernel_margin,
            kernel_route,
            domain_route,
            unbounded,
            solve,
        })
    }
}

/// Both parametric routes for a single `u`. Needs `alpha > 1`.
pub fn certify_parametric(p: &ProblemSpec, u: &[f64], cfg: &CertifyConfig) -> Result<ParametricCertificate> {
    if u.len() != p.n {
        return Err(Error::Precondition(format!("u has {} entries, expected {}", u.len(), p.n)));
    }
    ParametricContext::new(p, cfg)?.certify(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_infix;

    #[test]
    fn finite_differences_match_at_interior_and_edge() {
        let f = parse_infix("x1^2 + sqrt(x2)").unwrap();
        let g = fd_gradient(&f, &[3.0, 4.0]).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6 && (g[1] - 0.25).abs() < 1e-6);
        // one-sided at the edge of the square root's domain
        let g = fd_gradient(&f, &[1.0, 0.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && g[1] > 100.0);
    }

    #[test]
    fn flatness_measures_increase() {
        let set = SetDescription::new(
            2,
            vec![crate::geometry::Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0])],
            crate::geometry::PolyhedralCone::nonnegative_orthant(2),
            None,
            true,
        )
        .unwrap();
        let f = SmoothFn::new(parse_infix("x2^2").unwrap(), 2).unwrap();
        assert_eq!(ray_flatness(&f, &set, &[0.0, 0.0], &[1.0, 0.0]), Some(0.0));
        assert_eq!(ray_flatness(&f, &set, &[0.0, 0.0], &[0.0, 1.0]), Some(10000.0));
        assert_eq!(ray_flatness(&f, &set, &[0.0, 0.0], &[-1.0, 0.0]), None);
    }
}
