//! Dantzig selector on truncated moments, used to initialize the robust
//! iteration.
//!
//! The estimator solves `min ||theta||_1` subject to
//! `||Sigma theta - sigma||_inf <= R`, where `Sigma` and `sigma` average the
//! entrywise-clipped products `x x^T` and `y x`. Splitting
//! `theta = theta_plus - theta_minus` turns this into a linear program, solved
//! here with a dense two-phase tableau simplex.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{lasso_solve, LassoConfig};
use crate::data::{Dataset, MultiResponseDataset, Observations};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::samplers::RngStream;
use crate::stats::quantile;
use crate::tuning::Tuning;

/// Largest dimension the dense simplex accepts.
pub const MAX_DIM: usize = 600;
/// Products sampled when picking a truncation level from data.
const QUANTILE_SAMPLE: usize = 200_000;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

/// `sign(a) * min(|a|, tau)`
pub fn truncate(a: f64, tau: f64) -> f64 {
    a.clamp(-tau, tau)
}

/// Truncation level `(n M / ln p)^(1 / (1 + lambda))` for a design whose
/// `(2 + 2 lambda)`-th moments are bounded by `moment`.
pub fn plug_in_threshold(n: usize, p: usize, moment: f64, lambda: f64) -> f64 {
    (n as f64 * moment / (p.max(2) as f64).ln()).powf(1.0 / (1.0 + lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DantzigConfig {
    /// Clip level for `x x^T` entries.
    pub tau_x: Tuning,
    /// Clip level for `y x` entries.
    pub tau_yx: Tuning,
    /// Constraint radius.
    pub radius: Tuning,
    /// Quantile of absolute products used by `auto` clip levels.
    pub quantile: f64,
    /// Multiplier on the pilot Lasso's constraint residual used by `auto` radius.
    pub radius_inflation: f64,
    pub max_pivots: usize,
    pub seed: u64,
}

impl Default for DantzigConfig {
    fn default() -> Self {
        DantzigConfig {
            tau_x: Tuning::Auto,
            tau_yx: Tuning::Auto,
            radius: Tuning::Auto,
            quantile: 0.95,
            radius_inflation: 1.1,
            max_pivots: 200_000,
            seed: 0,
        }
    }
}

impl DantzigConfig {
    pub fn fixed(tau_x: f64, tau_yx: f64, radius: f64) -> Self {
        DantzigConfig {
            tau_x: Tuning::Fixed(tau_x),
            tau_yx: Tuning::Fixed(tau_yx),
            radius: Tuning::Fixed(radius),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedMoments {
    /// `p x p`, symmetric.
    pub sigma: DenseMatrix,
    /// `p x m` cross moments, one column per response.
    pub cross: DenseMatrix,
    pub tau_x: f64,
    pub tau_yx: f64,
}

impl TruncatedMoments {
    /// `max |Sigma theta - sigma_l|` for response column `l`.
    pub fn constraint_residual(&self, theta: &[f64], l: usize) -> Result<f64> {
        let fit = self.sigma.matvec(theta)?;
        Ok(fit
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.cross.get(j, l)).abs())
            .fold(0.0, f64::max))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && !v.is_nan() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Averages of clipped products with explicit clip levels (`inf` disables clipping).
pub fn truncated_moments(data: &dyn Observations, tau_x: f64, tau_yx: f64) -> Result<TruncatedMoments> {
    positive("tau_x", tau_x)?;
    positive("tau_yx", tau_yx)?;
    let (n, p, m) = (data.n(), data.p(), data.responses());
    if n == 0 {
        return Err(Error::EmptyData("moments need at least one row".into()));
    }
    let (mut xx, xy) = (0..n)
        .into_par_iter()
        .fold(
            || (vec![0.0; p * p], vec![0.0; p * m]),
            |(mut xx, mut xy), i| {
                let x = data.x().row(i);
                for j in 0..p {
                    let xj = x[j];
                    let row = &mut xx[j * p + j..(j + 1) * p];
                    for (acc, xk) in row.iter_mut().zip(&x[j..]) {
                        *acc += truncate(xj * xk, tau_x);
                    }
                }
                for (l, y) in data.y_row(i).iter().enumerate() {
                    for j in 0..p {
                        xy[j * m + l] += truncate(y * x[j], tau_yx);
                    }
                }
                (xx, xy)
            },
        )
        .reduce(
            || (vec![0.0; p * p], vec![0.0; p * m]),
            |(mut a, mut b), (c, d)| {
                a.iter_mut().zip(c).for_each(|(u, v)| *u += v);
                b.iter_mut().zip(d).for_each(|(u, v)| *u += v);
                (a, b)
            },
        );
    let nf = n as f64;
    for j in 0..p {
        for k in j..p {
            let v = xx[j * p + k] / nf;
            xx[j * p + k] = v;
            xx[k * p + j] = v;
        }
    }
    Ok(TruncatedMoments {
        sigma: DenseMatrix::new(p, p, xx)?,
        cross: DenseMatrix::new(p, m, xy.into_iter().map(|v| v / nf).collect())?,
        tau_x,
        tau_yx,
    })
}

/// The `q`-quantile of `|x_ij x_ik|` and of `|y_il x_ij|`, from a seeded
/// subsample when there are too many products.
pub fn product_quantiles(data: &dyn Observations, q: f64, seed: u64) -> Result<(f64, f64)> {
    let (n, p, m) = (data.n(), data.p(), data.responses());
    if n == 0 || p == 0 {
        return Err(Error::EmptyData("no products to summarize".into()));
    }
    let mut rng = RngStream::new(seed, 2);
    let pairs = p * (p + 1) / 2;
    let xx: Vec<f64> = if n.saturating_mul(pairs) <= QUANTILE_SAMPLE {
        let mut v = Vec::with_capacity(n * pairs);
        for i in 0..n {
            let x = data.x().row(i);
            for j in 0..p {
                v.extend(x[j..].iter().map(|xk| (x[j] * xk).abs()));
            }
        }
        v
    } else {
        (0..QUANTILE_SAMPLE)
            .map(|_| {
                let x = data.x().row(rng.below(n));
                let (j, k) = (rng.below(p), rng.below(p));
                (x[j] * x[k]).abs()
            })
            .collect()
    };
    let yx: Vec<f64> = if n.saturating_mul(p * m) <= QUANTILE_SAMPLE {
        (0..n)
            .flat_map(|i| {
                let x = data.x().row(i);
                data.y_row(i).iter().flat_map(move |y| x.iter().map(move |xj| (y * xj).abs()))
            })
            .collect()
    } else {
        (0..QUANTILE_SAMPLE)
            .map(|_| {
                let i = rng.below(n);
                (data.y_row(i)[rng.below(m)] * data.x().row(i)[rng.below(p)]).abs()
            })
            .collect()
    };
    Ok((quantile(&xx, q), quantile(&yx, q)))
}

/// Clip levels from `cfg`, resolving `auto` from data. A zero quantile
/// (e.g. mostly-zero products) falls back to no clipping.
fn resolve_thresholds(data: &dyn Observations, cfg: &DantzigConfig) -> Result<(f64, f64)> {
    let auto = match (cfg.tau_x, cfg.tau_yx) {
        (Tuning::Fixed(_), Tuning::Fixed(_)) => (0.0, 0.0),
        _ => product_quantiles(data, cfg.quantile, cfg.seed)?,
    };
    let pick = |t: Tuning, a: f64| match t {
        Tuning::Fixed(v) => v,
        Tuning::Auto if a > 0.0 => a,
        Tuning::Auto => f64::INFINITY,
    };
    Ok((pick(cfg.tau_x, auto.0), pick(cfg.tau_yx, auto.1)))
}

/// Truncated moments with `cfg`'s clip levels.
pub fn moments_for(data: &dyn Observations, cfg: &DantzigConfig) -> Result<TruncatedMoments> {
    let (tx, tyx) = resolve_thresholds(data, cfg)?;
    truncated_moments(data, tx, tyx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub theta: DenseVector,
    /// `||theta||_1` at the optimum.
    pub objective: f64,
    pub pivots: usize,
}

/// Solves the Dantzig program for response column 0 of `moments`.
pub fn dantzig_solve(moments: &TruncatedMoments, radius: f64) -> Result<DenseVector> {
    Ok(dantzig_lp(&moments.sigma, moments.cross.column(0).as_slice(), radius, 200_000)?.theta)
}

/// `min ||theta||_1` subject to `||sigma theta - cross||_inf <= radius`.
pub fn dantzig_lp(sigma: &DenseMatrix, cross: &[f64], radius: f64, max_pivots: usize) -> Result<LpSolution> {
    let p = sigma.rows();
    if sigma.cols() != p {
        return Err(Error::dims(format!("{p}x{p}"), format!("{p}x{}", sigma.cols())));
    }
    if cross.len() != p {
        return Err(Error::dims(p, cross.len()));
    }
    if p > MAX_DIM {
        return Err(Error::invalid(format!("dimension {p} exceeds the simplex limit {MAX_DIM}")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be non-negative, got {radius}")));
    }
    // variables (theta_plus, theta_minus); rows  S t+ - S t- <= c + R  and  -S t+ + S t- <= R - c
    let nv = 2 * p;
    let mut a = Vec::with_capacity(2 * p);
    let mut b = Vec::with_capacity(2 * p);
    for sign in [1.0, -1.0] {
        for j in 0..p {
            let row = sigma.row(j);
            let mut r = Vec::with_capacity(nv);
            r.extend(row.iter().map(|v| sign * v));
            r.extend(row.iter().map(|v| -sign * v));
            a.push(r);
            b.push(radius + sign * cross[j]);
        }
    }
    let cost = vec![1.0; nv];
    let (x, pivots) = simplex_minimize(&cost, &a, &b, max_pivots)?;
    let theta: Vec<f64> = (0..p).map(|j| x[j] - x[p + j]).collect();
    let objective = theta.iter().map(|v| v.abs()).sum();
    Ok(LpSolution { theta: DenseVector::new(theta)?, objective, pivots })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs; the last slot holds minus the objective value.
    reduced: Vec<f64>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let piv = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                row[col] = 0.0;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            self.reduced.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            self.reduced[col] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = col;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        self.reduced.resize(self.width, 0.0);
        for (i, &bcol) in self.basis.iter().enumerate() {
            let cb = cost.get(bcol).copied().unwrap_or(0.0);
            if cb != 0.0 {
                self.reduced.iter_mut().zip(&self.rows[i]).for_each(|(v, t)| *v -= cb * t);
            }
        }
    }

    /// Runs pivots until optimal over the columns `0..allowed`.
    fn optimize(&mut self, allowed: usize, pivots: &mut usize, max_pivots: usize) -> Result<()> {
        let rhs = self.width - 1;
        let scale = self.reduced[..allowed].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let cost_tol = 1e-11 * scale;
        let mut bland = false;
        let mut streak = 0;
        loop {
            let entering = if bland {
                (0..allowed).find(|&j| self.reduced[j] < -cost_tol)
            } else {
                (0..allowed)
                    .filter(|&j| self.reduced[j] < -cost_tol)
                    .min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
            };
            let Some(col) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let t = row[col];
                if t > 1e-11 {
                    let ratio = row[rhs].max(0.0) / t;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-13 || (ratio <= lr + 1e-13 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Err(Error::Unbounded) };
            if ratio <= 1e-13 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, col);
            *pivots += 1;
            if *pivots > max_pivots {
                return Err(Error::IterationLimit(max_pivots));
            }
        }
    }
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..k {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                for j in c..k {
                    a[i][j] -= f * a[c][j];
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| a[c][j] * x[j]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// `min c^T x` subject to `A x <= b`, `x >= 0`, by the two-phase simplex
/// method. Returns the optimal vertex and the number of pivots.
pub(crate) fn simplex_minimize(cost: &[f64], a: &[Vec<f64>], b: &[f64], max_pivots: usize) -> Result<(Vec<f64>, usize)> {
    let m = a.len();
    let nv = cost.len();
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let na = negative.len();
    let width = nv + m + na + 1;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = 0;
    for i in 0..m {
        let mut row = vec![0.0; width];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (v, aij) in row.iter_mut().zip(&a[i]) {
            *v = sign * aij;
        }
        row[nv + i] = sign;
        row[width - 1] = sign * b[i];
        if sign < 0.0 {
            row[nv + m + art] = 1.0;
            basis.push(nv + m + art);
            art += 1;
        } else {
            basis.push(nv + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, reduced: Vec::new(), width };
    let mut pivots = 0;

    if na > 0 {
        let mut phase1 = vec![0.0; nv + m + na];
        phase1[nv + m..].iter_mut().for_each(|c| *c = 1.0);
        t.set_costs(&phase1);
        t.optimize(nv + m + na, &mut pivots, max_pivots)?;
        let infeasibility = -t.reduced[width - 1];
        let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Err(Error::Infeasible);
        }
        // pivot artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= nv + m {
                match (0..nv + m).find(|&j| t.rows[r][j].abs() > 1e-9) {
                    Some(col) => t.pivot(r, col),
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let mut phase2 = cost.to_vec();
    phase2.resize(nv + m, 0.0);
    t.set_costs(&phase2);
    t.optimize(nv + m, &mut pivots, max_pivots)?;

    let mut x = vec![0.0; nv + m];
    for (i, &col) in t.basis.iter().enumerate() {
        if col < nv + m {
            x[col] = t.rows[i][width - 1].max(0.0);
        }
    }
    // recompute the vertex from the original rows to shed accumulated pivot error
    if t.rows.len() == m {
        let column = |i: usize, col: usize| if col < nv { a[i][col] } else if col - nv == i { 1.0 } else { 0.0 };
        let system: Vec<Vec<f64>> = (0..m).map(|i| t.basis.iter().map(|&c| column(i, c)).collect()).collect();
        if let Some(xb) = solve_dense(system, b.to_vec()) {
            if xb.iter().all(|v| *v > -1e-9) {
                x.iter_mut().for_each(|v| *v = 0.0);
                for (&col, v) in t.basis.iter().zip(xb) {
                    x[col] = v.max(0.0);
                }
            }
        }
    }
    x.truncate(nv);
    Ok((x, pivots))
}

fn auto_radius(moments: &TruncatedMoments, pilot: &DenseVector, l: usize, inflation: f64) -> Result<f64> {
    let r = inflation * moments.constraint_residual(pilot, l)?;
    Ok(if r > 0.0 { r } else { 1e-10 })
}

/// Truncated-moment Dantzig selector for a single response.
pub fn dantzig_init(data: &Dataset, cfg: &DantzigConfig) -> Result<DenseVector> {
    let moments = moments_for(data, cfg)?;
    let radius = match cfg.radius {
        Tuning::Fixed(r) => r,
        Tuning::Auto => {
            let pilot = lasso_solve(data, &LassoConfig { seed: cfg.seed, ..Default::default() })?;
            auto_radius(&moments, &pilot.theta, 0, cfg.radius_inflation)?
        }
    };
    Ok(dantzig_lp(&moments.sigma, moments.cross.column(0).as_slice(), radius, cfg.max_pivots)?.theta)
}

/// Column-by-column Dantzig selector for multiple responses, sharing one
/// `Sigma` and one radius bounding the entrywise constraint residual.
pub fn multi_dantzig_init(data: &MultiResponseDataset, cfg: &DantzigConfig) -> Result<DenseMatrix> {
    let moments = moments_for(data, cfg)?;
    let (p, m) = (data.x.cols(), data.y.cols());
    let radius = match cfg.radius {
        Tuning::Fixed(r) => r,
        Tuning::Auto => {
            let mut r: f64 = 0.0;
            for l in 0..m {
                let pilot = lasso_solve(&data.column(l), &LassoConfig { seed: cfg.seed, ..Default::default() })?;
                r = r.max(auto_radius(&moments, &pilot.theta, l, cfg.radius_inflation)?);
            }
            r
        }
    };
    let columns: Vec<DenseVector> = (0..m)
        .into_par_iter()
        .map(|l| Ok(dantzig_lp(&moments.sigma, moments.cross.column(l).as_slice(), radius, cfg.max_pivots)?.theta))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; p * m];
    for (l, col) in columns.iter().enumerate() {
        for j in 0..p {
            out[j * m + l] = col[j];
        }
    }
    DenseMatrix::new(p, m, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate(5.0, 3.0), 3.0);
        assert_eq!(truncate(-5.0, 3.0), -3.0);
        assert_eq!(truncate(2.0, 3.0), 2.0);
    }

    #[test]
    fn single_sample_moment_is_clipped() {
        let x = DenseMatrix::from_rows(&[vec![2.0, 0.0]]).unwrap();
        let d = Dataset::new(x, DenseVector::new(vec![1.0]).unwrap()).unwrap();
        let m = truncated_moments(&d, 1.0, f64::INFINITY).unwrap();
        assert_eq!(m.sigma.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.cross.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn identity_lp_examples() {
        let id = DenseMatrix::identity(2);
        let sol = dantzig_lp(&id, &[1.0, 0.0], 0.0, 1000).unwrap();
        assert!((sol.theta[0] - 1.0).abs() < 1e-12 && sol.theta[1].abs() < 1e-12);
        let sol = dantzig_lp(&DenseMatrix::identity(3), &[0.5, -2.0, 1.0], 2.0, 1000).unwrap();
        assert!(sol.theta.iter().all(|v| *v == 0.0));
        let sol = dantzig_lp(&id, &[3.0, -1.0], 0.5, 1000).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_reports_infeasible_and_unbounded() {
        // x1 <= -1 with x1 >= 0
        assert!(matches!(simplex_minimize(&[1.0], &[vec![1.0]], &[-1.0], 100), Err(Error::Infeasible)));
        // min -x1 with no upper bound
        assert!(matches!(simplex_minimize(&[-1.0], &[vec![-1.0]], &[1.0], 100), Err(Error::Unbounded)));
    }

    #[test]
    fn oversized_problem_rejected() {
        let big = DenseMatrix::identity(MAX_DIM + 1);
        assert!(dantzig_lp(&big, &vec![0.0; MAX_DIM + 1], 1.0, 10).is_err());
    }
}
