//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use robust_sparse::{DenseMatrix, DenseVector, Model, RngStream};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn gaussian_vector(len: usize, rng: &mut RngStream) -> DenseVector {
    DenseVector::new((0..len).map(|_| rng.normal()).collect()).unwrap()
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Best `s`-row-sparse approximation of a row-major `rows x cols` buffer,
/// found by trying every row support.
pub fn brute_force_projection(v: &[f64], cols: usize, s: usize) -> Vec<f64> {
    let rows = v.len() / cols;
    let k = s.min(rows);
    let row_sq: Vec<f64> = v.chunks(cols).map(|r| r.iter().map(|x| x * x).sum()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_subset(rows, k, &mut |idx| {
        let kept: f64 = idx.iter().map(|&i| row_sq[i]).sum();
        if best.as_ref().is_none_or(|(b, _)| kept > *b) {
            best = Some((kept, idx.to_vec()));
        }
    });
    let keep = best.map(|b| b.1).unwrap_or_default();
    let mut out = vec![0.0; v.len()];
    for i in keep {
        out[i * cols..(i + 1) * cols].copy_from_slice(&v[i * cols..(i + 1) * cols]);
    }
    out
}

/// Optimal value of `min ||theta||_1 s.t. ||sigma theta - cross||_inf <= radius`
/// by enumerating every vertex cut out by `p` of the hyperplanes
/// `theta_j = 0` and `(sigma theta - cross)_i = +-radius`.
pub fn brute_force_dantzig(sigma: &DenseMatrix, cross: &[f64], radius: f64) -> (f64, Vec<f64>) {
    let p = sigma.rows();
    // Hyperplane h: 0..p is theta_h = 0, p..2p is row (h - p) at +radius,
    // 2p..3p is row (h - 2p) at -radius.
    let mut best = (f64::INFINITY, vec![0.0; p]);
    for_each_subset(3 * p, p, &mut |hs| {
        let mut a = DMatrix::<f64>::zeros(p, p);
        let mut b = DVector::<f64>::zeros(p);
        for (r, &h) in hs.iter().enumerate() {
            if h < p {
                a[(r, h)] = 1.0;
            } else {
                let i = (h - p) % p;
                let sign = if h < 2 * p { 1.0 } else { -1.0 };
                for j in 0..p {
                    a[(r, j)] = sigma.get(i, j);
                }
                b[r] = cross[i] + sign * radius;
            }
        }
        let Some(theta) = a.lu().solve(&b) else { return };
        if theta.iter().any(|t| !t.is_finite()) {
            return;
        }
        let feasible = (0..p).all(|i| {
            let r: f64 = (0..p).map(|j| sigma.get(i, j) * theta[j]).sum::<f64>() - cross[i];
            r.abs() <= radius * (1.0 + 1e-9) + 1e-9
        });
        if feasible {
            let l1: f64 = theta.iter().map(|t| t.abs()).sum();
            if l1 < best.0 {
                best = (l1, theta.iter().copied().collect());
            }
        }
    });
    best
}

/// Central finite-difference gradient of the per-sample loss.
pub fn finite_difference(model: Model, x: &[f64], y: &[f64], theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            t[j] = theta[j] + h;
            let up = model.loss(x, y, &t).unwrap();
            t[j] = theta[j] - h;
            let down = model.loss(x, y, &t).unwrap();
            t[j] = theta[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Max relative deviation, with the scale floored at one.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Sample covariance `X^T X / n` of `n` rows.
pub fn sample_covariance(x: &DenseMatrix) -> DenseMatrix {
    let (n, p) = x.shape();
    let mut out = vec![0.0; p * p];
    for i in 0..n {
        let r = x.row(i);
        for a in 0..p {
            for b in 0..p {
                out[a * p + b] += r[a] * r[b];
            }
        }
    }
    for v in &mut out {
        *v /= n as f64;
    }
    DenseMatrix::new(p, p, out).unwrap()
}
