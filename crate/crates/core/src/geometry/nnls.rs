//! Nonnegative least squares (Lawson–Hanson active set), used to project
//! onto finitely generated cones.

use nalgebra::{DMatrix, DVector};

use crate::vecops::{dot, norm};

fn residual(cols: &[Vec<f64>], coef: &[f64], v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for (c, &l) in cols.iter().zip(coef) {
        if l != 0.0 {
            for (ri, ci) in r.iter_mut().zip(c) {
                *ri -= l * ci;
            }
        }
    }
    r
}

fn least_squares(cols: &[Vec<f64>], idx: &[usize], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let a = DMatrix::from_fn(n, idx.len(), |i, j| cols[idx[j]][i]);
    let b = DVector::from_column_slice(v);
    let svd = a.svd(true, true);
    match svd.solve(&b, 1e-13) {
        Ok(s) => s.iter().copied().collect(),
        Err(_) => vec![0.0; idx.len()],
    }
}

/// Coefficients `l >= 0` minimizing `|sum_j l_j cols[j] - v|`.
pub fn nnls(cols: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let m = cols.len();
    let mut x = vec![0.0; m];
    if m == 0 {
        return x;
    }
    let tol = 1e-13 * norm(v).max(1.0);
    let mut passive = vec![false; m];
    for _ in 0..(3 * m + 10) {
        let r = residual(cols, &x, v);
        let w: Vec<f64> = cols.iter().map(|c| dot(c, &r)).collect();
        let Some(j) = (0..m)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
        else {
            break;
        };
        passive[j] = true;
        for _ in 0..(3 * m + 10) {
            let idx: Vec<usize> = (0..m).filter(|&i| passive[i]).collect();
            let s = least_squares(cols, &idx, v);
            if s.iter().all(|&si| si > 0.0) {
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = s[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if s[k] <= 0.0 {
                    let denom = x[i] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (s[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Euclidean projection of `v` onto the cone generated by `cols`.
pub fn project_onto_cone(cols: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let coef = nnls(cols, v);
    let mut p = vec![0.0; v.len()];
    for (c, &l) in cols.iter().zip(&coef) {
        for (pi, ci) in p.iter_mut().zip(c) {
            *pi += l * ci;
        }
    }
    p
}
