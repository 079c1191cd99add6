//! Hooke–Jeeves pattern search with a feasibility filter.
//!
//! The objective returns `None` outside the feasible set. Infeasible trial
//! points are handed to a repair map (typically a projection onto the
//! linear part of the set) and accepted only if the repaired point is
//! feasible and strictly better.

use crate::vecops::{axpy, sub};

#[derive(Debug, Clone, Copy)]
pub struct PatternConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
    /// Also poll the diagonals `(e_i ± e_j)/sqrt(2)`, which helps along
    /// oblique boundaries.
    pub diagonals: bool,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            initial_step: 1.0,
            min_step: 1e-9,
            max_evals: 200_000,
            diagonals: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

pub fn poll_directions(n: usize, diagonals: bool) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    if diagonals {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                for sj in [s, -s] {
                    let mut d = vec![0.0; n];
                    d[i] = s;
                    d[j] = sj;
                    dirs.push(d);
                }
            }
        }
    }
    dirs
}

struct Search<'a, F, R> {
    objective: &'a F,
    repair: &'a R,
    evals: usize,
}

impl<F, R> Search<'_, F, R>
where
    F: Fn(&[f64]) -> Option<f64>,
    R: Fn(&[f64]) -> Option<Vec<f64>>,
{
    fn try_point(&mut self, p: Vec<f64>) -> Option<(Vec<f64>, f64)> {
        self.evals += 1;
        if let Some(v) = (self.objective)(&p) {
            return Some((p, v));
        }
        let q = (self.repair)(&p)?;
        self.evals += 1;
        (self.objective)(&q).map(|v| (q, v))
    }

    fn explore(&mut self, base: &[f64], fbase: f64, step: f64, dirs: &[Vec<f64>]) -> (Vec<f64>, f64) {
        let mut x = base.to_vec();
        let mut fx = fbase;
        for d in dirs {
            for s in [step, -step] {
                if let Some((y, fy)) = self.try_point(axpy(&x, s, d)) {
                    if fy < fx {
                        x = y;
                        fx = fy;
                        break;
                    }
                }
            }
        }
        (x, fx)
    }
}

/// Minimize from a feasible `start` with value `start_value`.
pub fn pattern_search<F, R>(objective: &F, repair: &R, start: &[f64], start_value: f64, cfg: &PatternConfig) -> PatternResult
where
    F: Fn(&[f64]) -> Option<f64>,
    R: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let dirs = poll_directions(start.len(), cfg.diagonals);
    let mut s = Search {
        objective,
        repair,
        evals: 0,
    };
    let mut x = start.to_vec();
    let mut fx = start_value;
    let mut step = cfg.initial_step;
    while step >= cfg.min_step && s.evals < cfg.max_evals {
        let (mut y, mut fy) = s.explore(&x, fx, step, &dirs);
        if fy < fx {
            // pattern moves while they keep paying off
            loop {
                let jump = axpy(&y, 1.0, &sub(&y, &x));
                x = y.clone();
                fx = fy;
                if s.evals >= cfg.max_evals {
                    break;
                }
                let Some((p, fp)) = s.try_point(jump) else { break };
                let (z, fz) = s.explore(&p, fp, step, &dirs);
                if fz < fx {
                    y = z;
                    fy = fz;
                } else {
                    break;
                }
            }
        } else {
            step *= 0.5;
        }
    }
    PatternResult {
        x,
        value: fx,
        evals: s.evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_in_orthant() {
        // (x1 - 3)^2 + (x2 + 1)^2 over x >= 0: minimum at (3, 0)
        let f = |x: &[f64]| (x[0] >= 0.0 && x[1] >= 0.0).then(|| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2));
        let repair = |x: &[f64]| Some(x.iter().map(|c| c.max(0.0)).collect());
        let r = pattern_search(&f, &repair, &[10.0, 10.0], f(&[10.0, 10.0]).unwrap(), &PatternConfig::default());
        assert!((r.x[0] - 3.0).abs() < 1e-7 && r.x[1].abs() < 1e-7, "{r:?}");
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn never_leaves_feasible_set() {
        let f = |x: &[f64]| (x[0] * x[0] + x[1] * x[1] <= 1.0).then(|| x[0] + 2.0 * x[1]);
        let repair = |_: &[f64]| None;
        let r = pattern_search(&f, &repair, &[0.0, 0.0], 0.0, &PatternConfig::default());
        assert!(r.x[0] * r.x[0] + r.x[1] * r.x[1] <= 1.0);
        // the true minimum is -sqrt(5) at -(1,2)/sqrt(5)
        assert!(r.value < -2.0, "{r:?}");
    }
}
