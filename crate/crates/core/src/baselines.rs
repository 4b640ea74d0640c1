//! Comparison estimators: l1-penalized least squares by coordinate descent,
//! l1-penalized Huber regression by proximal gradient, and Lasso on
//! quantile-truncated data. Logistic counterparts share the proximal code.
//!
//! None of these fit an intercept.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, nonzero_indices, DenseVector};
use crate::models::{log_partition, sigmoid};
use crate::samplers::RngStream;
use crate::stats::quantile;
use crate::tuning::Tuning;

/// `sign(a) * max(|a| - lambda, 0)`
pub fn soft_threshold(a: f64, lambda: f64) -> f64 {
    if a > lambda {
        a - lambda
    } else if a < -lambda {
        a + lambda
    } else {
        0.0
    }
}

pub use crate::dantzig::truncate;

/// Descending log-spaced grid from `max` to `max * min_ratio`.
pub fn lambda_grid(max: f64, size: usize, min_ratio: f64) -> Vec<f64> {
    if size <= 1 {
        return vec![max];
    }
    let step = min_ratio.ln() / (size - 1) as f64;
    (0..size).map(|k| max * (step * k as f64).exp()).collect()
}

/// Seeded permutation of `0..n` cut into `k` contiguous folds.
pub fn folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::new(seed, 0).shuffle(&mut order);
    let k = k.clamp(1, n.max(1));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Seeded split into (train, validation) with `fraction` of rows in train.
pub fn train_validation_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::new(seed, 1).shuffle(&mut order);
    let n_train = ((n as f64) * fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::EmptyData(format!("cannot split {n} rows at fraction {fraction}")));
    }
    let valid = order.split_off(n_train);
    Ok((order, valid))
}

/// Sufficient statistics of least squares: sums of `x x^T`, `x y`, `y^2`.
#[derive(Clone, Debug)]
pub struct Gram {
    p: usize,
    count: usize,
    xx: Vec<f64>,
    xy: Vec<f64>,
    yy: f64,
}

impl Gram {
    pub fn from_rows(data: &Dataset, rows: &[usize]) -> Gram {
        let p = data.x.cols();
        let mut xx = vec![0.0; p * p];
        let mut xy = vec![0.0; p];
        let mut yy = 0.0;
        for &i in rows {
            let x = data.x.row(i);
            let y = data.y[i];
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    axpy(xj, &x[j..], &mut xx[j * p + j..(j + 1) * p]);
                }
            }
            axpy(y, x, &mut xy);
            yy += y * y;
        }
        for j in 0..p {
            for k in 0..j {
                xx[j * p + k] = xx[k * p + j];
            }
        }
        Gram { p, count: rows.len(), xx, xy, yy }
    }

    pub fn from_dataset(data: &Dataset) -> Gram {
        Gram::from_rows(data, &(0..data.x.rows()).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn add(&mut self, other: &Gram, sign: f64) {
        axpy(sign, &other.xx, &mut self.xx);
        axpy(sign, &other.xy, &mut self.xy);
        self.yy += sign * other.yy;
        self.count = if sign > 0.0 { self.count + other.count } else { self.count - other.count };
    }

    /// Mean squared error `n^-1 ||y - X theta||^2` of these rows.
    pub fn mse(&self, theta: &[f64]) -> f64 {
        let p = self.p;
        let support = nonzero_indices(theta);
        let mut quad = 0.0;
        for &j in &support {
            let row = &self.xx[j * p..(j + 1) * p];
            quad += theta[j] * support.iter().map(|&k| row[k] * theta[k]).sum::<f64>();
        }
        let lin: f64 = support.iter().map(|&j| self.xy[j] * theta[j]).sum();
        ((quad - 2.0 * lin + self.yy) / self.count as f64).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    /// Penalty level; `auto` selects it by k-fold cross-validation.
    pub lambda: Tuning,
    pub folds: usize,
    pub grid_size: usize,
    pub min_ratio: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: Tuning::Auto,
            folds: 10,
            grid_size: 50,
            min_ratio: 1e-4,
            max_sweeps: 10_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        LassoConfig { lambda: Tuning::Fixed(lambda), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit {
    pub theta: DenseVector,
    pub lambda: f64,
    pub sweeps: usize,
    /// False when some fit on the path hit `max_sweeps`.
    pub converged: bool,
    /// Cross-validated MSE per grid point, when the penalty was selected.
    pub cv_error: Option<Vec<f64>>,
}

/// `1/2 n^-1 ||y - X theta||^2 + lambda ||theta||_1` in Gram form,
/// minimized by cyclic coordinate descent.
#[derive(Clone, Debug)]
pub struct LassoProblem {
    p: usize,
    g: Vec<f64>,
    c: Vec<f64>,
    yy: f64,
}

impl LassoProblem {
    pub fn new(gram: &Gram) -> Result<LassoProblem> {
        if gram.is_empty() {
            return Err(Error::EmptyData("lasso needs at least one row".into()));
        }
        let n = gram.count as f64;
        Ok(LassoProblem {
            p: gram.p,
            g: gram.xx.iter().map(|v| v / n).collect(),
            c: gram.xy.iter().map(|v| v / n).collect(),
            yy: gram.yy / n,
        })
    }

    pub fn from_dataset(data: &Dataset) -> Result<LassoProblem> {
        LassoProblem::new(&Gram::from_dataset(data))
    }

    /// Smallest penalty with an all-zero solution.
    pub fn lambda_max(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn objective(&self, theta: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for j in nonzero_indices(theta) {
            quad += theta[j] * dot(&self.g[j * p..(j + 1) * p], theta);
        }
        0.5 * (quad - 2.0 * dot(&self.c, theta) + self.yy) + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
    }

    /// `G theta`, the state carried between sweeps.
    pub fn gradient_state(&self, theta: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.p];
        for j in nonzero_indices(theta) {
            axpy(theta[j], &self.g[j * self.p..(j + 1) * self.p], &mut q);
        }
        q
    }

    /// One cyclic pass over all coordinates. Returns the largest scaled change.
    pub fn sweep(&self, lambda: f64, theta: &mut [f64], q: &mut [f64]) -> f64 {
        let p = self.p;
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            let gjj = self.g[j * p + j];
            if gjj <= 0.0 {
                continue;
            }
            let old = theta[j];
            let z = self.c[j] - (q[j] - gjj * old);
            let new = soft_threshold(z, lambda) / gjj;
            if new != old {
                let delta = new - old;
                axpy(delta, &self.g[j * p..(j + 1) * p], q);
                theta[j] = new;
                max_delta = max_delta.max(delta.abs() * gjj.sqrt());
            }
        }
        max_delta
    }

    /// Runs sweeps from `theta` until the largest change falls below `tol`.
    /// Returns `(sweeps, converged)`.
    pub fn solve_from(&self, lambda: f64, theta: &mut [f64], max_sweeps: usize, tol: f64) -> (usize, bool) {
        let mut q = self.gradient_state(theta);
        for sweep in 1..=max_sweeps {
            if self.sweep(lambda, theta, &mut q) <= tol {
                return (sweep, true);
            }
        }
        (max_sweeps, false)
    }

    pub fn solve(&self, lambda: f64, max_sweeps: usize, tol: f64) -> (Vec<f64>, usize, bool) {
        let mut theta = vec![0.0; self.p];
        let (sweeps, ok) = self.solve_from(lambda, &mut theta, max_sweeps, tol);
        (theta, sweeps, ok)
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt_residual(&self, theta: &[f64], lambda: f64) -> f64 {
        let q = self.gradient_state(theta);
        let mut worst: f64 = 0.0;
        for j in 0..self.p {
            let grad = q[j] - self.c[j];
            let v = if theta[j] != 0.0 {
                (grad + lambda * theta[j].signum()).abs()
            } else {
                (grad.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("penalty must be non-negative, got {lambda}")))
    }
}

/// Lasso fit with a fixed penalty or a cross-validated one refit on all rows.
pub fn lasso_solve(data: &Dataset, cfg: &LassoConfig) -> Result<LassoFit> {
    let n = data.x.rows();
    if n == 0 {
        return Err(Error::EmptyData("lasso needs at least one row".into()));
    }
    if let Tuning::Fixed(lambda) = cfg.lambda {
        check_lambda(lambda)?;
        let problem = LassoProblem::from_dataset(data)?;
        let (theta, sweeps, converged) = problem.solve(lambda, cfg.max_sweeps, cfg.tol);
        return Ok(LassoFit { theta: DenseVector::new(theta)?, lambda, sweeps, converged, cv_error: None });
    }

    let fold_rows = folds(n, cfg.folds, cfg.seed);
    if fold_rows.len() < 2 {
        return Err(Error::EmptyData(format!("cross-validation needs at least 2 rows, got {n}")));
    }
    let fold_grams: Vec<Gram> = fold_rows.iter().map(|rows| Gram::from_rows(data, rows)).collect();
    let mut total = fold_grams[0].clone();
    for g in &fold_grams[1..] {
        total.add(g, 1.0);
    }
    let full = LassoProblem::new(&total)?;
    let grid = lambda_grid(full.lambda_max(), cfg.grid_size, cfg.min_ratio);

    let mut converged = true;
    let mut sse = vec![0.0; grid.len()];
    for held in &fold_grams {
        let mut train = total.clone();
        train.add(held, -1.0);
        let problem = LassoProblem::new(&train)?;
        let mut theta = vec![0.0; data.x.cols()];
        for (k, &lambda) in grid.iter().enumerate() {
            let (_, ok) = problem.solve_from(lambda, &mut theta, cfg.max_sweeps, cfg.tol);
            converged &= ok;
            sse[k] += held.mse(&theta) * held.len() as f64;
        }
    }
    let cv_error: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let best = (0..grid.len()).fold(0, |b, k| if cv_error[k] < cv_error[b] { k } else { b });

    let mut theta = vec![0.0; data.x.cols()];
    let mut sweeps = 0;
    for &lambda in &grid[..=best] {
        let (s, ok) = full.solve_from(lambda, &mut theta, cfg.max_sweeps, cfg.tol);
        sweeps += s;
        converged &= ok;
    }
    Ok(LassoFit {
        theta: DenseVector::new(theta)?,
        lambda: grid[best],
        sweeps,
        converged,
        cv_error: Some(cv_error),
    })
}

/// Huber function: quadratic inside `[-tau, tau]`, linear outside.
pub fn huber_loss(r: f64, tau: f64) -> f64 {
    if r.abs() <= tau {
        0.5 * r * r
    } else {
        tau * r.abs() - 0.5 * tau * tau
    }
}

/// Derivative of [`huber_loss`].
pub fn huber_psi(r: f64, tau: f64) -> f64 {
    r.clamp(-tau, tau)
}

/// Smooth part of a penalized objective.
pub trait SmoothLoss {
    /// Loss value at `theta`, writing its gradient into `grad`.
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    fn dim(&self) -> usize;
}

fn linear_predictor(data: &Dataset, rows: &[usize], theta: &[f64]) -> Vec<f64> {
    let support = nonzero_indices(theta);
    rows.iter()
        .map(|&i| {
            let x = data.x.row(i);
            support.iter().map(|&j| x[j] * theta[j]).sum()
        })
        .collect()
}

/// `n^-1 sum h_tau(y_i - x_i^T theta)` over a subset of rows.
///
/// The gradient is the least-squares gradient from the Gram matrix of the
/// rows, corrected on the rows whose residual exceeds `tau`.
pub struct HuberLoss<'a> {
    data: &'a Dataset,
    rows: &'a [usize],
    tau: f64,
    gram: Gram,
}

impl<'a> HuberLoss<'a> {
    pub fn new(data: &'a Dataset, rows: &'a [usize], tau: f64) -> Self {
        HuberLoss { data, rows, tau, gram: Gram::from_rows(data, rows) }
    }

    /// Top eigenvalue of `X^T X / n` over the rows: the gradient's Lipschitz constant.
    fn lipschitz(&self) -> f64 {
        gram_top_eigenvalue(&self.gram)
    }
}

impl SmoothLoss for HuberLoss<'_> {
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.gram.p;
        let support = nonzero_indices(theta);
        // grad = -(X^T y - X^T X theta - sum_out (r_i - psi_i) x_i) / n
        for (j, g) in grad.iter_mut().enumerate() {
            let row = &self.gram.xx[j * p..(j + 1) * p];
            *g = support.iter().map(|&k| row[k] * theta[k]).sum::<f64>() - self.gram.xy[j];
        }
        let eta = linear_predictor(self.data, self.rows, theta);
        let n = self.rows.len() as f64;
        let mut value = 0.0;
        for (&i, e) in self.rows.iter().zip(eta) {
            let r = self.data.y[i] - e;
            value += huber_loss(r, self.tau);
            let excess = r - huber_psi(r, self.tau);
            if excess != 0.0 {
                axpy(excess, self.data.x.row(i), grad);
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        value / n
    }

    fn dim(&self) -> usize {
        self.data.x.cols()
    }
}

/// Mean negative log-likelihood of the logistic model over a subset of rows.
pub struct LogisticLoss<'a> {
    pub data: &'a Dataset,
    pub rows: &'a [usize],
}

impl SmoothLoss for LogisticLoss<'_> {
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let eta = linear_predictor(self.data, self.rows, theta);
        let n = self.rows.len() as f64;
        let mut value = 0.0;
        for (&i, e) in self.rows.iter().zip(eta) {
            let y = self.data.y[i];
            value += log_partition(e) - y * e;
            axpy((sigmoid(e) - y) / n, self.data.x.row(i), grad);
        }
        value / n
    }

    fn dim(&self) -> usize {
        self.data.x.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ProxConfig {
    fn default() -> Self {
        ProxConfig { max_iter: 5_000, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxFit {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Accelerated proximal gradient for `loss + lambda ||theta||_1` with step
/// `1 / lipschitz`, restarting momentum whenever the objective increases.
pub fn prox_gradient(
    loss: &dyn SmoothLoss,
    lambda: f64,
    lipschitz: f64,
    init: &[f64],
    cfg: &ProxConfig,
) -> Result<ProxFit> {
    check_lambda(lambda)?;
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
    }
    let p = loss.dim();
    if init.len() != p {
        return Err(Error::dims(p, init.len()));
    }
    let step = 1.0 / lipschitz;
    let l1 = |t: &[f64]| lambda * t.iter().map(|v| v.abs()).sum::<f64>();
    let mut theta = init.to_vec();
    let mut momentum_point = theta.clone();
    let mut grad = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut t_k: f64 = 1.0;
    let mut objective = loss.value_grad(&theta, &mut grad) + l1(&theta);

    for iter in 1..=cfg.max_iter {
        loss.value_grad(&momentum_point, &mut grad);
        for j in 0..p {
            next[j] = soft_threshold(momentum_point[j] - step * grad[j], step * lambda);
        }
        if next.iter().any(|v| !v.is_finite() || v.abs() > crate::solvers::DIVERGENCE_BOUND) {
            return Err(Error::Diverged { iteration: iter });
        }
        let next_objective = loss.value_grad(&next, &mut grad) + l1(&next);
        let change = next.iter().zip(&theta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = theta.iter().fold(1.0f64, |m, v| m.max(v.abs()));

        if next_objective > objective {
            // restart from the last accepted point with a plain step
            t_k = 1.0;
            momentum_point.copy_from_slice(&theta);
            if change <= cfg.tol * scale {
                return Ok(ProxFit { theta, iterations: iter, converged: true });
            }
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        let beta = (t_k - 1.0) / t_next;
        for j in 0..p {
            momentum_point[j] = next[j] + beta * (next[j] - theta[j]);
        }
        theta.copy_from_slice(&next);
        objective = next_objective;
        t_k = t_next;
        if change <= cfg.tol * scale {
            return Ok(ProxFit { theta, iterations: iter, converged: true });
        }
    }
    Ok(ProxFit { theta, iterations: cfg.max_iter, converged: false })
}

/// Largest eigenvalue of the row subset's `X^T X / n` by power iteration on the Gram matrix.
fn gram_lipschitz(data: &Dataset, rows: &[usize]) -> f64 {
    gram_top_eigenvalue(&Gram::from_rows(data, rows))
}

fn gram_top_eigenvalue(gram: &Gram) -> f64 {
    let p = gram.p;
    let n = gram.count.max(1) as f64;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut w: Vec<f64> = gram.xx.chunks(p).map(|row| dot(row, &v) / n).collect();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        w.iter_mut().for_each(|a| *a /= norm);
        v = w;
        if (norm - lambda).abs() <= 1e-12 * norm {
            return norm;
        }
        lambda = norm;
    }
    lambda
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HuberConfig {
    /// Robustification threshold; `auto` takes a quantile of pilot Lasso residuals.
    pub tau: Tuning,
    /// Penalty; `auto` picks the grid value with the lowest validation MSE.
    pub lambda: Tuning,
    pub tau_quantile: f64,
    pub train_fraction: f64,
    pub grid_size: usize,
    pub min_ratio: f64,
    pub prox: ProxConfig,
    pub seed: u64,
}

impl Default for HuberConfig {
    fn default() -> Self {
        HuberConfig {
            tau: Tuning::Auto,
            lambda: Tuning::Auto,
            tau_quantile: 0.95,
            train_fraction: 0.8,
            grid_size: 50,
            min_ratio: 1e-4,
            prox: ProxConfig { max_iter: 2_000, tol: 1e-7 },
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HuberFit {
    pub theta: DenseVector,
    pub tau: f64,
    pub lambda: f64,
    pub converged: bool,
}

/// Penalized Huber regression.
pub fn huber_solve(data: &Dataset, cfg: &HuberConfig) -> Result<HuberFit> {
    let n = data.x.rows();
    if n == 0 {
        return Err(Error::EmptyData("huber regression needs at least one row".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let (train, valid) = match cfg.lambda {
        Tuning::Auto => train_validation_split(n, cfg.train_fraction, cfg.seed)?,
        Tuning::Fixed(_) => (all.clone(), Vec::new()),
    };

    let tau = match cfg.tau {
        Tuning::Fixed(t) if t > 0.0 => t,
        Tuning::Fixed(t) => return Err(Error::invalid(format!("Huber threshold must be positive, got {t}"))),
        Tuning::Auto => {
            let train_data = data.subset(&train);
            let pilot = lasso_solve(&train_data, &LassoConfig { seed: cfg.seed, ..Default::default() })?;
            let fitted = train_data.x.matvec(&pilot.theta)?;
            let resid: Vec<f64> = fitted.iter().zip(train_data.y.iter()).map(|(f, y)| (y - f).abs()).collect();
            let t = quantile(&resid, cfg.tau_quantile);
            if t > 0.0 { t } else { 1.0 }
        }
    };

    let lambda = match cfg.lambda {
        Tuning::Fixed(l) => {
            check_lambda(l)?;
            l
        }
        Tuning::Auto => {
            let loss = HuberLoss::new(data, &train, tau);
            let lipschitz = loss.lipschitz().max(f64::MIN_POSITIVE) * 1.01;
            let mut grad = vec![0.0; data.x.cols()];
            loss.value_grad(&vec![0.0; data.x.cols()], &mut grad);
            let lmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let grid = lambda_grid(lmax, cfg.grid_size, cfg.min_ratio);
            let mut theta = vec![0.0; data.x.cols()];
            let mut best = (f64::INFINITY, grid[0]);
            for &lambda in &grid {
                theta = prox_gradient(&loss, lambda, lipschitz, &theta, &cfg.prox)?.theta;
                let pred = linear_predictor(data, &valid, &theta);
                let mse = valid.iter().zip(pred).map(|(&i, e)| (data.y[i] - e).powi(2)).sum::<f64>() / valid.len() as f64;
                if mse < best.0 {
                    best = (mse, lambda);
                }
            }
            best.1
        }
    };

    let loss = HuberLoss::new(data, &all, tau);
    let lipschitz = loss.lipschitz().max(f64::MIN_POSITIVE) * 1.01;
    let fit = prox_gradient(&loss, lambda, lipschitz, &vec![0.0; data.x.cols()], &cfg.prox)?;
    Ok(HuberFit { theta: DenseVector::new(fit.theta)?, tau, lambda, converged: fit.converged })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShrinkageConfig {
    pub x_quantile: f64,
    pub y_quantile: f64,
    pub lasso: LassoConfig,
}

impl Default for ShrinkageConfig {
    fn default() -> Self {
        ShrinkageConfig { x_quantile: 0.95, y_quantile: 0.95, lasso: LassoConfig::default() }
    }
}

/// Clips every feature at the `qx` quantile of all `|x_ij|` and every response
/// at the `qy` quantile of `|y_i|`.
pub fn truncate_dataset(data: &Dataset, qx: f64, qy: f64) -> Result<Dataset> {
    for q in [qx, qy] {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::invalid(format!("truncation quantile must lie in (0, 1], got {q}")));
        }
    }
    if data.x.rows() == 0 {
        return Err(Error::EmptyData("nothing to truncate".into()));
    }
    let abs_x: Vec<f64> = data.x.as_slice().iter().map(|v| v.abs()).collect();
    let abs_y: Vec<f64> = data.y.iter().map(|v| v.abs()).collect();
    let tau_x = quantile(&abs_x, qx);
    let tau_y = quantile(&abs_y, qy);
    let x = data.x.as_slice().iter().map(|v| truncate(*v, tau_x)).collect();
    let y = data.y.iter().map(|v| truncate(*v, tau_y)).collect();
    Dataset::new(
        crate::linalg::DenseMatrix::new(data.x.rows(), data.x.cols(), x)?,
        DenseVector::new(y)?,
    )
}

/// Lasso on quantile-truncated data.
pub fn shrinkage_solve(data: &Dataset, cfg: &ShrinkageConfig) -> Result<LassoFit> {
    lasso_solve(&truncate_dataset(data, cfg.x_quantile, cfg.y_quantile)?, &cfg.lasso)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticLassoConfig {
    /// Penalty; `auto` picks the grid value with the lowest validation deviance.
    pub lambda: Tuning,
    pub train_fraction: f64,
    pub grid_size: usize,
    pub min_ratio: f64,
    pub prox: ProxConfig,
    pub seed: u64,
}

impl Default for LogisticLassoConfig {
    fn default() -> Self {
        LogisticLassoConfig {
            lambda: Tuning::Auto,
            train_fraction: 0.8,
            grid_size: 50,
            min_ratio: 1e-3,
            prox: ProxConfig { max_iter: 2_000, tol: 1e-7 },
            seed: 0,
        }
    }
}

/// l1-penalized logistic regression.
pub fn logistic_lasso_solve(data: &Dataset, cfg: &LogisticLassoConfig) -> Result<LassoFit> {
    let n = data.x.rows();
    if n == 0 {
        return Err(Error::EmptyData("logistic fit needs at least one row".into()));
    }
    crate::models::Model::Logistic.validate(data, data.x.cols())?;
    let p = data.x.cols();
    let all: Vec<usize> = (0..n).collect();
    // the logistic Hessian is bounded by X^T X / (4n)
    let lipschitz = |rows: &[usize]| (gram_lipschitz(data, rows) / 4.0).max(f64::MIN_POSITIVE) * 1.01;
    let lambda = match cfg.lambda {
        Tuning::Fixed(l) => {
            check_lambda(l)?;
            l
        }
        Tuning::Auto => {
            let (train, valid) = train_validation_split(n, cfg.train_fraction, cfg.seed)?;
            let loss = LogisticLoss { data, rows: &train };
            let valid_loss = LogisticLoss { data, rows: &valid };
            let l = lipschitz(&train);
            let mut grad = vec![0.0; p];
            loss.value_grad(&vec![0.0; p], &mut grad);
            let lmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let grid = lambda_grid(lmax, cfg.grid_size, cfg.min_ratio);
            let mut theta = vec![0.0; p];
            let mut best = (f64::INFINITY, grid[0]);
            for &lambda in &grid {
                theta = prox_gradient(&loss, lambda, l, &theta, &cfg.prox)?.theta;
                let dev = valid_loss.value_grad(&theta, &mut grad);
                if dev < best.0 {
                    best = (dev, lambda);
                }
            }
            best.1
        }
    };
    let fit = prox_gradient(&LogisticLoss { data, rows: &all }, lambda, lipschitz(&all), &vec![0.0; p], &cfg.prox)?;
    Ok(LassoFit {
        theta: DenseVector::new(fit.theta)?,
        lambda,
        sweeps: fit.iterations,
        converged: fit.converged,
        cv_error: None,
    })
}

/// Logistic Lasso on features clipped at the `x_quantile` of `|x_ij|`.
/// Labels are left alone.
pub fn logistic_shrinkage_solve(data: &Dataset, x_quantile: f64, cfg: &LogisticLassoConfig) -> Result<LassoFit> {
    let clipped = truncate_dataset(data, x_quantile, 1.0)?;
    logistic_lasso_solve(&clipped, cfg)
}
