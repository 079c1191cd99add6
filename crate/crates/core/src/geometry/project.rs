//! Euclidean projection onto polyhedra `{x : Ax <= b}`, optionally
//! intersected with a ball, by Dykstra's alternating projections.

use crate::vecops::{dist, dot, norm};

const MAX_SWEEPS: usize = 2000;

/// A closed ball `B(center, radius)`.
#[derive(Debug, Clone)]
pub struct Ball<'a> {
    pub center: &'a [f64],
    pub radius: f64,
}

fn project_halfspace(a: &[f64], b: f64, x: &mut [f64]) {
    let viol = dot(a, x) - b;
    if viol > 0.0 {
        let aa = dot(a, a);
        if aa > 0.0 {
            let s = viol / aa;
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi -= s * ai;
            }
        }
    }
}

fn project_ball(ball: &Ball<'_>, x: &mut [f64]) {
    let d = dist(x, ball.center);
    if d > ball.radius {
        let s = ball.radius / d;
        for (xi, ci) in x.iter_mut().zip(ball.center) {
            *xi = ci + s * (*xi - ci);
        }
    }
}

/// Largest constraint violation of `x` (including the ball), zero if
/// feasible.
pub fn violation(a: &[Vec<f64>], b: &[f64], ball: Option<&Ball<'_>>, x: &[f64]) -> f64 {
    let mut v = 0.0f64;
    for (row, &bi) in a.iter().zip(b) {
        let n = norm(row);
        if n > 0.0 {
            v = v.max((dot(row, x) - bi) / n);
        }
    }
    if let Some(ball) = ball {
        v = v.max(dist(x, ball.center) - ball.radius);
    }
    v
}

/// Projection of `x` onto `{y : Ay <= b} ∩ ball`. Returns `None` when the
/// iteration stalls away from feasibility (the set is likely empty).
pub fn project(a: &[Vec<f64>], b: &[f64], ball: Option<&Ball<'_>>, x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let scale = 1.0 + norm(x);
    if violation(a, b, ball, x) <= 0.0 {
        return Some(x.to_vec());
    }
    if a.len() == 1 && ball.is_none() {
        let mut y = x.to_vec();
        project_halfspace(&a[0], b[0], &mut y);
        return Some(y);
    }
    let sets = a.len() + usize::from(ball.is_some());
    let mut y = x.to_vec();
    let mut corrections = vec![vec![0.0; n]; sets];
    for _ in 0..MAX_SWEEPS {
        let before = y.clone();
        for (k, corr) in corrections.iter_mut().enumerate() {
            let mut z: Vec<f64> = y.iter().zip(corr.iter()).map(|(yi, ci)| yi + ci).collect();
            let pre = z.clone();
            if k < a.len() {
                project_halfspace(&a[k], b[k], &mut z);
            } else if let Some(ball) = ball {
                project_ball(ball, &mut z);
            }
            for i in 0..n {
                corr[i] = pre[i] - z[i];
            }
            y = z;
        }
        if dist(&before, &y) <= 1e-14 * scale && violation(a, b, ball, &y) <= 1e-12 * scale {
            break;
        }
    }
    (violation(a, b, ball, &y) <= 1e-9 * scale).then_some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_and_simplex() {
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0]];
        let b = vec![0.0, 0.0];
        let p = project(&a, &b, None, &[3.0, -2.0]).unwrap();
        assert!(dist(&p, &[3.0, 0.0]) < 1e-12);

        // simplex x >= 0, x1 + x2 <= 1: (2, 2) -> (0.5, 0.5)
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = vec![0.0, 0.0, 1.0];
        let p = project(&a, &b, None, &[2.0, 2.0]).unwrap();
        assert!(dist(&p, &[0.5, 0.5]) < 1e-9, "{p:?}");
        let p = project(&a, &b, None, &[3.0, -1.0]).unwrap();
        assert!(dist(&p, &[1.0, 0.0]) < 1e-9, "{p:?}");
    }

    #[test]
    fn ray_with_ball() {
        // {x1 >= 1, x2 = 0} ∩ B(0, 5)
        let a = vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let b = vec![-1.0, 0.0, 0.0];
        let center = [0.0, 0.0];
        let ball = Ball {
            center: &center,
            radius: 5.0,
        };
        let p = project(&a, &b, Some(&ball), &[10.0, 3.0]).unwrap();
        assert!(dist(&p, &[5.0, 0.0]) < 1e-9, "{p:?}");
        let tiny = Ball {
            center: &center,
            radius: 0.5,
        };
        assert!(project(&a, &b, Some(&tiny), &[10.0, 3.0]).is_none());
    }
}
