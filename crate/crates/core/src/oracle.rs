//! Brute-force grid minimization, the ground truth for desk-scale tests.
//! Depends only on expressions and constraint membership.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::SetDescription;
use crate::vecops::better;

/// Highest dimension the oracle scans.
pub const MAX_DIM: usize = 3;

/// Largest grid an oracle call may scan.
pub const MAX_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Grid spacing per axis of the final scan.
    pub spacing: Vec<f64>,
    pub feasible_points: usize,
}

fn pick(a: Option<(f64, Vec<f64>)>, b: Option<(f64, Vec<f64>)>) -> Option<(f64, Vec<f64>)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if better(b.0, &b.1, a.0, &a.1) { b } else { a }),
    }
}

fn value_at(f: &Expr, set: &SetDescription, x: &[f64]) -> Option<f64> {
    if !set.contains(x) {
        return None;
    }
    f.eval(x).ok().filter(|v| v.is_finite())
}

/// Scan `coords[0] × coords[1] × ...` and return the best feasible point
/// (smallest value, ties broken lexicographically) and the feasible count.
fn scan(f: &Expr, set: &SetDescription, coords: &[Vec<f64>]) -> (Option<(f64, Vec<f64>)>, usize) {
    let n = coords.len();
    let rest: usize = coords[1..].iter().map(Vec::len).product();
    coords[0]
        .par_iter()
        .map(|&x0| {
            let mut best = None;
            let mut count = 0;
            let mut x = vec![0.0; n];
            x[0] = x0;
            for mut k in 0..rest {
                for i in (1..n).rev() {
                    let m = coords[i].len();
                    x[i] = coords[i][k % m];
                    k /= m;
                }
                if let Some(v) = value_at(f, set, &x) {
                    count += 1;
                    best = pick(best, Some((v, x.clone())));
                }
            }
            (best, count)
        })
        .reduce(|| (None, 0), |a, b| (pick(a.0, b.0), a.1 + b.1))
}

fn axis(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![lo];
    }
    (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect()
}

/// Exhaustive scan of a `resolution[i]`-point grid on each axis of the box
/// `[lo, hi]`, restricted to the constraint set.
pub fn grid_minimize(f: &Expr, set: &SetDescription, lo: &[f64], hi: &[f64], resolution: &[usize]) -> Result<OracleResult> {
    let n = set.dim();
    if lo.len() != n || hi.len() != n || resolution.len() != n {
        return Err(Error::Precondition("box and resolution must match the dimension".into()));
    }
    if n > MAX_DIM {
        return Err(Error::Precondition(format!("the grid oracle handles n <= {MAX_DIM}")));
    }
    if resolution.iter().any(|&m| m < 2) {
        return Err(Error::Precondition("resolution must be at least 2 per axis".into()));
    }
    let total = resolution.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m));
    if total.is_none_or(|t| t > MAX_POINTS) {
        return Err(Error::Precondition(format!("grid exceeds {MAX_POINTS} points")));
    }
    let coords: Vec<Vec<f64>> = (0..n).map(|i| axis(lo[i], hi[i], resolution[i])).collect();
    let spacing = (0..n).map(|i| (hi[i] - lo[i]) / (resolution[i] - 1) as f64).collect();
    let (best, feasible_points) = scan(f, set, &coords);
    let (value, x) = best.ok_or(Error::NoFeasiblePoint)?;
    Ok(OracleResult {
        x,
        value,
        spacing,
        feasible_points,
    })
}

/// Zoom around `start`: each round scans `start ± spacing` with step
/// `spacing / factor` (21 points per axis for factor 10) and recenters on
/// the best point.
pub fn refine(f: &Expr, set: &SetDescription, start: &[f64], spacing: &[f64], rounds: usize, factor: f64) -> Result<OracleResult> {
    let mut best_value = value_at(f, set, start).ok_or(Error::NoFeasiblePoint)?;
    let mut best = start.to_vec();
    let mut spacing = spacing.to_vec();
    let half = factor.round() as i64;
    let mut feasible_points = 0;
    for _ in 0..rounds {
        let step: Vec<f64> = spacing.iter().map(|s| s / factor).collect();
        let coords: Vec<Vec<f64>> = best
            .iter()
            .zip(&step)
            .map(|(&c, &s)| (-half..=half).map(|j| c + j as f64 * s).collect())
            .collect();
        let (found, count) = scan(f, set, &coords);
        feasible_points += count;
        if let Some((v, x)) = found {
            if better(v, &x, best_value, &best) {
                best_value = v;
                best = x;
            }
        }
        spacing = step;
    }
    Ok(OracleResult {
        x: best,
        value: best_value,
        spacing,
        feasible_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_infix;
    use crate::geometry::{ConeUnion, LinearSystem, Piece, PolyhedralCone};

    fn e(s: &str) -> Expr {
        parse_infix(s).unwrap()
    }

    fn quadrant() -> PolyhedralCone {
        PolyhedralCone::nonnegative_orthant(2)
    }

    fn ex1() -> SetDescription {
        let disk = Piece::smooth(vec![e("(x1 - 2)^2 + (x2 - 2)^2 - 1")]);
        let ray = Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![-1.0, 0.0, 0.0]);
        SetDescription::new(2, vec![disk, ray], quadrant(), None, false).unwrap()
    }

    fn ex2() -> SetDescription {
        let piece = Piece {
            linear: Some(LinearSystem {
                a: vec![vec![0.0, -1.0]],
                b: vec![-16.0],
            }),
            smooth: vec![e("2 - x1*x2")],
        };
        SetDescription::new(2, vec![piece], quadrant(), Some(ConeUnion::single(quadrant())), true).unwrap()
    }

    #[test]
    fn first_example_hits_the_minimizer() {
        let r = grid_minimize(&e("x1*x2 + sqrt(x1)"), &ex1(), &[0.0, 0.0], &[10.0, 10.0], &[201, 201]).unwrap();
        assert_eq!(r.x, vec![1.0, 0.0]);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn second_example_scan_and_zoom() {
        let f = e("x2^(5/2) + 0.5*x1^2 - x1*x2");
        let r = grid_minimize(&f, &ex2(), &[0.0, 16.0], &[50.0, 50.0], &[341, 341]).unwrap();
        assert!((r.x[0] - 16.0).abs() < 0.2 && r.x[1] == 16.0, "{r:?}");
        assert!((r.value - 896.0).abs() < 0.01);
        let z = refine(&f, &ex2(), &[16.0, 16.0], &[0.1, 0.1], 3, 10.0).unwrap();
        assert!((z.x[0] - 16.0).abs() < 1e-3 && (z.x[1] - 16.0).abs() < 1e-3);
        assert!((z.value - 896.0).abs() < 1e-3);
        let z2 = refine(&f, &ex2(), &r.x, &r.spacing, 3, 10.0).unwrap();
        assert!((z2.value - 896.0).abs() < 1e-3, "{z2:?}");
    }

    #[test]
    fn exact_optimum_is_unchanged_by_zoom() {
        let q = SetDescription::new(
            2,
            vec![Piece::linear(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0])],
            quadrant(),
            None,
            true,
        )
        .unwrap();
        let f = e("x1^2 + x2^2");
        let r = grid_minimize(&f, &q, &[0.0, 0.0], &[1.0, 1.0], &[7, 7]).unwrap();
        assert_eq!((r.x.clone(), r.value), (vec![0.0, 0.0], 0.0));
        let z = refine(&f, &q, &r.x, &r.spacing, 3, 10.0).unwrap();
        assert_eq!(z.x, vec![0.0, 0.0]);
        assert_eq!(refine(&f, &q, &[-1.0, 0.0], &[0.1, 0.1], 3, 10.0), Err(Error::NoFeasiblePoint));
    }

    #[test]
    fn finer_grids_never_do_worse() {
        let f = e("x2^(5/2) + 0.5*x1^2 - x1*x2");
        let coarse = grid_minimize(&f, &ex2(), &[0.0, 16.0], &[48.0, 48.0], &[25, 17]).unwrap();
        let fine = grid_minimize(&f, &ex2(), &[0.0, 16.0], &[48.0, 48.0], &[49, 33]).unwrap();
        assert!(fine.value <= coarse.value);
        assert!(grid_minimize(&f, &ex2(), &[0.0, 0.0], &[1.0, 1.0], &[5, 5]).is_err());
    }
}
