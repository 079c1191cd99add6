//! Expanding-truncation solver: minimize over `K ∩ B(0, k)` for growing
//! `k`, and diagnose whether the minimizers settle or run off to infinity.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::geometry::project::Ball;
use crate::geometry::{box_grid, sphere_directions, SetDescription};
use crate::kernel::{distance_to_rays, KernelClass, KernelReport};
use crate::problem::ProblemSpec;
use crate::search::{pattern_search, PatternConfig};
use crate::vecops::{better, dist, dot, norm, normalized, scale, sub};
use crate::verdict::ValidationVerdict;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfig {
    pub k0: f64,
    pub growth: f64,
    pub max_doublings: usize,
    pub restarts: usize,
    /// Seed grid points per axis over `[0, k]^n` (or `[-k, k]^n`).
    pub grid_per_axis: usize,
    /// Iterates with norm at most `ratio * k` count as interior.
    pub ratio: f64,
    pub converge_after: usize,
    pub escape_after: usize,
    pub drift_tolerance: f64,
    pub value_tolerance: f64,
    /// Pattern search stops at step `< min_step_ratio * k`.
    pub min_step_ratio: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k0: 8.0,
            growth: 2.0,
            max_doublings: 12,
            restarts: 5,
            grid_per_axis: 32,
            ratio: 0.9,
            converge_after: 2,
            escape_after: 3,
            drift_tolerance: 1e-2,
            value_tolerance: 1e-9,
            min_step_ratio: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub seeds: usize,
    pub restarts: usize,
}

fn in_orthant(set: &SetDescription) -> bool {
    set.ambient
        .generators()
        .is_ok_and(|g| g.iter().all(|v| v.iter().all(|&c| c >= 0.0)))
}

/// Feasible seed points for `K ∩ B(0, k)`: supplied points, a grid, and
/// projections of a coarse grid and of sphere points onto the pieces.
pub(crate) fn truncation_seeds(set: &SetDescription, k: f64, extra: &[Vec<f64>], per_axis: usize) -> Vec<Vec<f64>> {
    let n = set.dim();
    let origin = vec![0.0; n];
    let ball = Ball {
        center: &origin,
        radius: k,
    };
    let inside = |x: &[f64]| norm(x) <= k * (1.0 + 1e-12) && set.contains(x);
    let lo = if in_orthant(set) { vec![0.0; n] } else { vec![-k; n] };
    let hi = vec![k; n];
    let mut out: Vec<Vec<f64>> = extra.iter().filter(|x| inside(x)).cloned().collect();
    out.extend(box_grid(&lo, &hi, per_axis).into_iter().filter(|x| inside(x)));
    let coarse = box_grid(&lo, &hi, 8);
    let shell: Vec<Vec<f64>> = [0.25, 0.5, 1.0]
        .iter()
        .flat_map(|&r| sphere_directions(n, 64).into_iter().map(move |d| scale(&d, r * k)))
        .collect();
    out.extend(
        coarse
            .par_iter()
            .chain(shell.par_iter())
            .filter_map(|y| set.project_into(y, Some(&ball)))
            .filter(|x| inside(x))
            .collect::<Vec<_>>(),
    );
    out
}

/// Multistart feasibility-filtered pattern search on `K ∩ B(0, k)`.
/// `extra` seeds (a feasible start, the previous truncation's solution)
/// are always tried first.
pub fn solve_truncated(
    f: &SmoothFn,
    set: &SetDescription,
    k: f64,
    extra: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<TruncatedSolution> {
    let value = |x: &[f64]| -> Option<f64> {
        if norm(x) > k * (1.0 + 1e-12) || !set.contains(x) {
            return None;
        }
        f.eval(x).ok().filter(|v| v.is_finite())
    };
    let origin = vec![0.0; set.dim()];
    let ball = Ball {
        center: &origin,
        radius: k,
    };
    let repair = |x: &[f64]| set.project_into(x, Some(&ball));
    let candidates = truncation_seeds(set, k, extra, cfg.grid_per_axis);
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .filter_map(|x| value(&x).map(|v| (v, x)))
        .collect();
    if scored.is_empty() {
        return Err(Error::NoFeasibleSeed);
    }
    let seeds_found = scored.len();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| crate::vecops::lex_cmp(&a.1, &b.1)));
    // best seeds, preferring distinct points; supplied seeds always run
    let mut starts: Vec<(f64, Vec<f64>)> = extra
        .iter()
        .filter_map(|x| value(x).map(|v| (v, x.clone())))
        .collect();
    for s in scored {
        if starts.len() >= cfg.restarts + extra.len() {
            break;
        }
        if !starts.iter().any(|(_, x)| dist(x, &s.1) < 1e-6 * (1.0 + k)) {
            starts.push(s);
        }
    }
    let pcfg = PatternConfig {
        initial_step: k / 8.0,
        min_step: cfg.min_step_ratio * k,
        ..PatternConfig::default()
    };
    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|(v, x)| {
            let r = pattern_search(&value, &repair, x, *v, &pcfg);
            (r.value, r.x)
        })
        .collect();
    let mut best = results[0].clone();
    for r in &results[1..] {
        if better(r.0, &r.1, best.0, &best.1) {
            best = r.clone();
        }
    }
    Ok(TruncatedSolution {
        x: best.1,
        value: best.0,
        seeds: seeds_found,
        restarts: starts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    Escaping,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub radius: f64,
    pub x: Vec<f64>,
    pub norm: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub u: Vec<f64>,
    pub x: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub escape_direction: Option<Vec<f64>>,
    /// Distance from the escape direction to the nearest reported kernel
    /// ray, when a kernel report was supplied.
    pub kernel_distance: Option<f64>,
    /// `f∞` at the escape direction, when declared.
    pub asymptotic_value: Option<f64>,
    pub final_radius: f64,
    pub restarts: usize,
    pub trace: Vec<TraceEntry>,
}

/// Solve at radii `k0, growth*k0, ...`. Converged once the iterate stays
/// well inside the ball with a stable value for `converge_after`
/// consecutive truncations; Escaping once it tracks the boundary for
/// `escape_after` consecutive truncations with a stable direction.
pub fn solve_expanding(p: &ProblemSpec, u: &[f64], cfg: &SolverConfig, kernel: Option<&KernelReport>) -> Result<SolveOutcome> {
    let f = p.shifted_objective(u)?;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut k = cfg.k0;
    let mut calm = 0;
    let mut pushing = 0;
    let mut restarts = 0;
    let outcome = |status: SolveStatus, trace: Vec<TraceEntry>, k: f64, restarts: usize| -> SolveOutcome {
        let last = trace.last().cloned();
        let mut o = SolveOutcome {
            status,
            u: u.to_vec(),
            x: None,
            value: None,
            escape_direction: None,
            kernel_distance: None,
            asymptotic_value: None,
            final_radius: k,
            restarts,
            trace,
        };
        if let Some(last) = last {
            match status {
                SolveStatus::Converged => {
                    o.x = Some(last.x);
                    o.value = Some(last.value);
                }
                SolveStatus::Escaping => {
                    let v = normalized(&last.x).expect("escaping iterates are nonzero");
                    o.kernel_distance = kernel.map(|r| {
                        let mut rays = r.rays.clone();
                        if r.classification == KernelClass::Nontrivial {
                            rays.extend(r.kernel_rays().rays);
                        }
                        distance_to_rays(&rays, &v)
                    });
                    o.asymptotic_value = p.asymptotic.as_ref().and_then(|h| h.eval(&v).ok());
                    o.escape_direction = Some(v);
                }
                SolveStatus::Indeterminate => {}
            }
        }
        o
    };
    for _ in 0..=cfg.max_doublings {
        let mut extra: Vec<Vec<f64>> = p.feasible_start.iter().cloned().collect();
        if let Some(last) = trace.last() {
            extra.push(last.x.clone());
        }
        match solve_truncated(&f, &p.set, k, &extra, cfg) {
            Err(Error::NoFeasibleSeed) => {
                k *= cfg.growth;
                continue;
            }
            Err(e) => return Err(e),
            Ok(sol) => {
                restarts = restarts.max(sol.restarts);
                let n = norm(&sol.x);
                let prev = trace.last().cloned();
                trace.push(TraceEntry {
                    radius: k,
                    x: sol.x,
                    norm: n,
                    value: sol.value,
                });
                let stable = prev.as_ref().is_some_and(|q| {
                    (sol.value - q.value).abs() <= cfg.value_tolerance * (1.0 + sol.value.abs())
                });
                calm = if n <= cfg.ratio * k && stable { calm + 1 } else { 0 };
                pushing = if n >= cfg.ratio * k { pushing + 1 } else { 0 };
                if calm >= cfg.converge_after {
                    return Ok(outcome(SolveStatus::Converged, trace, k, restarts));
                }
                if pushing >= cfg.escape_after {
                    let tail = &trace[trace.len() - cfg.escape_after..];
                    let dirs: Vec<Vec<f64>> = tail.iter().filter_map(|t| normalized(&t.x)).collect();
                    let drift = dirs
                        .windows(2)
                        .map(|w| dist(&w[0], &w[1]))
                        .fold(0.0f64, f64::max);
                    if dirs.len() == tail.len() && drift <= cfg.drift_tolerance {
                        return Ok(outcome(SolveStatus::Escaping, trace, k, restarts));
                    }
                }
            }
        }
        k *= cfg.growth;
    }
    if trace.is_empty() {
        return Err(Error::NoFeasibleSeed);
    }
    let k_last = trace.last().map(|t| t.radius).unwrap_or(k);
    Ok(outcome(SolveStatus::Indeterminate, trace, k_last, restarts))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MintyResult {
    Skipped { reason: String },
    Checked(ValidationVerdict),
}

impl MintyResult {
    pub fn passed(&self) -> Option<bool> {
        match self {
            MintyResult::Skipped { .. } => None,
            MintyResult::Checked(v) => Some(v.pass),
        }
    }
}

/// Variational check at `x`: `<∇f_u(x), y - x> >= -1e-6 (1 + |y - x|)` for
/// members `y` from a grid around `x` and random draws.
pub fn minty_check<R: Rng>(f_u: &SmoothFn, set: &SetDescription, x: &[f64], probes: usize, rng: &mut R) -> MintyResult {
    let g = match f_u.gradient(x) {
        Ok(g) => g,
        Err(e) => {
            return MintyResult::Skipped {
                reason: e.to_string(),
            }
        }
    };
    let radius = 2.0 * (1.0 + norm(x));
    let mut verdict = ValidationVerdict::new(
        "minty",
        json!({"probes": probes, "radius": radius, "tolerance": "1e-6*(1+|y-x|)", "point": x}),
    );
    let n = x.len();
    let per_axis = ((probes / 2) as f64).powf(1.0 / n as f64).floor().max(2.0) as usize;
    let lo: Vec<f64> = x.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = x.iter().map(|c| c + radius).collect();
    let mut ys: Vec<Vec<f64>> = box_grid(&lo, &hi, per_axis).into_iter().filter(|y| set.contains(y)).collect();
    ys.extend(set.sample_members(rng, radius + norm(x), probes.saturating_sub(ys.len())));
    let mut worst = f64::INFINITY;
    for y in ys.iter().take(probes) {
        let d = sub(y, x);
        let pairing = dot(&g, &d);
        let slack = pairing / (1.0 + norm(&d));
        worst = worst.min(slack);
        if pairing < -1e-6 * (1.0 + norm(&d)) {
            verdict.fail(y, pairing, "feasible direction with negative pairing");
        }
    }
    verdict.statistic = worst;
    MintyResult::Checked(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_infix;
    use crate::geometry::{Piece, PolyhedralCone};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quadrant_set() -> SetDescription {
        SetDescription::new(
            2,
            vec![Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0])],
            PolyhedralCone::nonnegative_orthant(2),
            None,
            true,
        )
        .unwrap()
    }

    #[test]
    fn truncated_quadratic() {
        let f = SmoothFn::new(parse_infix("x1^2 + x2^2").unwrap(), 2).unwrap();
        let s = solve_truncated(&f, &quadrant_set(), 5.0, &[], &SolverConfig::default()).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn minty_on_quadratic() {
        let f = SmoothFn::new(parse_infix("(x1 - 1)^2 + (x2 + 1)^2").unwrap(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let set = quadrant_set();
        assert_eq!(minty_check(&f, &set, &[1.0, 0.0], 500, &mut rng).passed(), Some(true));
        assert_eq!(minty_check(&f, &set, &[2.0, 0.0], 500, &mut rng).passed(), Some(false));
        let r = SmoothFn::new(parse_infix("sqrt(x1)").unwrap(), 2).unwrap();
        assert_eq!(minty_check(&r, &set, &[0.0, 1.0], 500, &mut rng).passed(), None);
    }
}
