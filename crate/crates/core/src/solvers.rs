//! Hard-thresholded gradient iterations and their diagnostics.
//!
//! [`right_solve`] runs `theta <- P_s(theta - eta * g(theta))` for a fixed
//! number of iterations with a median-of-means gradient `g`;
//! [`iht_solve`] is the same loop with the empirical mean gradient. Matrix
//! parameters are thresholded by rows.

use serde::{Deserialize, Serialize};

use crate::data::Observations;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, threshold_rows_in_place, DenseMatrix, DenseVector, Parameter};
use crate::models::Model;
use crate::mom::{BlockPartition, GradientOracle, MeanOracle, MomOracle, OracleKind, PartitionMode, Workspace};
use crate::samplers::RngStream;

/// Step size used for the linear rate experiments.
pub const DEFAULT_RIGHT_STEP: f64 = 0.02;
/// Smaller step used for vanilla IHT to keep it from blowing up immediately.
pub const DEFAULT_IHT_STEP: f64 = 0.001;
/// Any iterate coordinate beyond this magnitude counts as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e15;

#[derive(Clone, Debug)]
pub struct RightConfig<P> {
    pub sparsity: usize,
    pub step_size: f64,
    pub iterations: usize,
    pub blocks: usize,
    pub init: P,
    pub oracle: OracleKind,
    pub partition: PartitionMode,
    /// Seed of the stream used by [`PartitionMode::SeededShuffle`].
    pub partition_seed: u64,
    pub record_trajectory: bool,
}

impl<P: Parameter> RightConfig<P> {
    pub fn new(init: P, sparsity: usize, step_size: f64, iterations: usize, blocks: usize) -> Self {
        RightConfig {
            sparsity,
            step_size,
            iterations,
            blocks,
            init,
            oracle: OracleKind::Mom,
            partition: PartitionMode::Contiguous,
            partition_seed: 0,
            record_trajectory: false,
        }
    }

    pub fn with_oracle(mut self, oracle: OracleKind) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::invalid("sparsity level must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.blocks == 0 {
            return Err(Error::invalid("block count must be at least 1"));
        }
        Ok(())
    }

    fn build_oracle(&self, n: usize) -> Result<Box<dyn GradientOracle>> {
        Ok(match self.oracle {
            OracleKind::Mean => Box::new(MeanOracle),
            OracleKind::Mom => {
                let mut rng = RngStream::new(self.partition_seed, 0);
                let part = match self.partition {
                    PartitionMode::Contiguous => BlockPartition::contiguous(n, self.blocks)?,
                    PartitionMode::SeededShuffle => BlockPartition::shuffled(n, self.blocks, &mut rng)?,
                };
                Box::new(MomOracle::new(part))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<P> {
    pub estimate: P,
    /// Iterates `theta^1 .. theta^T` when recording was requested.
    pub trajectory: Option<Vec<P>>,
    /// `||theta^t - theta*||` for `t = 0..=T` when the truth was supplied.
    pub per_iteration_error: Option<Vec<f64>>,
}

/// Runs the robust iteration with the oracle named in `cfg`.
pub fn right_solve<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    cfg: &RightConfig<P>,
    truth: Option<&P>,
) -> Result<SolveResult<P>> {
    cfg.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyData("no observations".into()));
    }
    let oracle = cfg.build_oracle(data.n())?;
    solve_with_oracle(model, data, oracle.as_ref(), cfg, truth)
}

/// Vanilla iterative hard thresholding: the same loop with the empirical mean gradient.
pub fn iht_solve<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    cfg: &RightConfig<P>,
    truth: Option<&P>,
) -> Result<SolveResult<P>> {
    let cfg = RightConfig { oracle: OracleKind::Mean, ..cfg.clone() };
    right_solve(model, data, &cfg, truth)
}

/// The thresholded gradient loop for an arbitrary oracle.
pub fn solve_with_oracle<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    oracle: &dyn GradientOracle,
    cfg: &RightConfig<P>,
    truth: Option<&P>,
) -> Result<SolveResult<P>> {
    cfg.validate()?;
    let (rows, cols) = (cfg.init.rows(), cfg.init.cols());
    model.validate(data, rows * cols)?;
    if let Some(t) = truth {
        if t.as_flat().len() != rows * cols {
            return Err(Error::dims(rows * cols, t.as_flat().len()));
        }
    }

    let mut theta = cfg.init.as_flat().to_vec();
    let mut grad = vec![0.0; theta.len()];
    let mut ws = Workspace::default();
    let mut trajectory = cfg.record_trajectory.then(|| Vec::with_capacity(cfg.iterations));
    let mut errors = truth.map(|t| {
        let mut e = Vec::with_capacity(cfg.iterations + 1);
        e.push(cfg.init.distance_to(t));
        e
    });

    for t in 0..cfg.iterations {
        oracle.estimate_into(model, data, &theta, &mut grad, &mut ws)?;
        for (th, g) in theta.iter_mut().zip(&grad) {
            *th -= cfg.step_size * g;
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: t + 1 });
        }
        threshold_rows_in_place(&mut theta, cols, cfg.sparsity);
        if theta.iter().any(|v| v.abs() > DIVERGENCE_BOUND) {
            return Err(Error::Diverged { iteration: t + 1 });
        }
        if trajectory.is_some() || errors.is_some() {
            let iterate = P::from_flat(rows, cols, theta.clone())?;
            if let (Some(e), Some(truth)) = (errors.as_mut(), truth) {
                e.push(iterate.distance_to(truth));
            }
            if let Some(tr) = trajectory.as_mut() {
                tr.push(iterate);
            }
        }
    }

    Ok(SolveResult {
        estimate: P::from_flat(rows, cols, theta)?,
        trajectory,
        per_iteration_error: errors,
    })
}

/// `ceil(c * ln(n / ln p))`, at least 1.
pub fn suggested_iterations(n: usize, p: usize, c: f64) -> usize {
    let lp = (p.max(3) as f64).ln();
    let v = (c * (n as f64 / lp).max(1.0).ln()).ceil();
    (v as usize).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    /// `K = c * ln(p * ln n)`
    PLogN,
    /// `K = c * ln(p * ln(n / ln p))`
    PLogNOverLogP,
    /// `K = c * (m + ln p)` for multi-response problems with `m` columns.
    ResponsesPlusLogP { responses: usize },
    Fixed { blocks: usize },
}

/// Block count under `rule`, rounded and clamped into `[1, n]`.
pub fn block_count(rule: BlockRule, n: usize, p: usize, c: f64) -> usize {
    let n_f = n as f64;
    let p_f = p.max(2) as f64;
    let raw = match rule {
        BlockRule::PLogN => c * (p_f * n_f.max(3.0).ln()).ln(),
        BlockRule::PLogNOverLogP => c * (p_f * (n_f / p_f.ln()).max(std::f64::consts::E).ln()).ln(),
        BlockRule::ResponsesPlusLogP { responses } => c * (responses as f64 + p_f.ln()),
        BlockRule::Fixed { blocks } => blocks as f64,
    };
    (raw.round() as usize).clamp(1, n.max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    pub a: f64,
    pub b: f64,
    pub eta0: f64,
    /// `sqrt(1 - 4 a b eta0)`
    pub phi: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ConvergenceConstants {
    /// Step size `2 a eta0` that the contraction guarantee refers to.
    pub fn step_size(&self) -> f64 {
        2.0 * self.a * self.eta0
    }

    /// Whether a stability multiplier `phi_mult` is small enough (`phi_mult < 1/c2`).
    pub fn admits_multiplier(&self, phi_mult: f64) -> bool {
        phi_mult < 1.0 / self.c2
    }

    /// Bound `c1^t * initial_error + c2 * gamma`.
    pub fn error_bound(&self, t: usize, initial_error: f64, gamma: f64) -> f64 {
        self.c1.powi(t as i32) * initial_error + self.c2 * gamma
    }
}

/// Contraction and floor constants for given correlated-gradient parameters
/// `(a, b)` and step scale `eta0`.
pub fn theorem1_constants(a: f64, b: f64, eta0: f64) -> Result<ConvergenceConstants> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("a must be positive, got {a}")));
    }
    if !(b > 0.0 && b <= 1.0 / (4.0 * a)) {
        return Err(Error::invalid(format!("b must lie in (0, 1/(4a)], got {b}")));
    }
    if !(eta0 > 0.0 && eta0 <= 1.0) {
        return Err(Error::invalid(format!("eta0 must lie in (0, 1], got {eta0}")));
    }
    let q = 4.0 * a * b * eta0;
    if q >= 1.0 {
        return Err(Error::invalid(format!("4ab*eta0 = {q} must be below 1")));
    }
    let phi = (1.0 - q).sqrt();
    let c1 = (3.0 + phi) / 4.0;
    let c2 = 4.0 * a * eta0 * (1.0 + phi) / (phi - phi * phi);
    let denom = -3.0 * phi * phi + 2.0 * phi + 1.0;
    let c0 = 1.0 + 64.0 * phi.powi(4) / (denom * denom);
    Ok(ConvergenceConstants { a, b, eta0, phi, c0, c1, c2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrsEstimate {
    pub phi_mult: f64,
    pub gamma_add: f64,
    pub probe_count: usize,
}

/// l2 norm of the `k` largest rows (entries when `cols == 1`) of `v`, i.e.
/// the supremum of `||v_S||` over index sets of size `k`.
fn top_k_norm(v: &[f64], cols: usize, k: usize) -> f64 {
    let mut sq: Vec<f64> = v.chunks(cols).map(|r| r.iter().map(|x| x * x).sum()).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    sq.iter().take(k).sum::<f64>().sqrt()
}

/// Smallest `(phi, gamma)` with `e_i <= phi * d_i + gamma` for all points,
/// minimizing `phi + gamma` over `phi = 0` and the pairwise slopes.
pub fn fit_stability_envelope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyData("no probes".into()));
    }
    let gamma_at = |phi: f64| points.iter().map(|(d, e)| e - phi * d).fold(0.0, f64::max);
    let mut candidates = vec![0.0];
    for (i, (di, ei)) in points.iter().enumerate() {
        for (dj, ej) in &points[i + 1..] {
            if dj != di {
                let slope = (ej - ei) / (dj - di);
                if slope > 0.0 && slope.is_finite() {
                    candidates.push(slope);
                }
            }
        }
    }
    let mut best = (0.0, gamma_at(0.0));
    for phi in candidates {
        let g = gamma_at(phi);
        if phi + g < best.0 + best.1 {
            best = (phi, g);
        }
    }
    Ok(best)
}

/// Population gradient `Sigma (theta - theta*)` of least squares.
pub fn linear_population_gradient<'a>(
    sigma: &'a DenseMatrix,
    truth: &'a DenseVector,
) -> impl Fn(&DenseVector) -> Result<DenseVector> + 'a {
    move |theta: &DenseVector| sigma.matvec(&theta.sub(truth)?)
}

/// Empirically probes the stability of the MoM oracle: deviations of
/// `g(theta)` from the population gradient on the worst `2s + s*` rows,
/// summarized by the tightest dominating line in `||theta - theta*||`.
#[allow(clippy::too_many_arguments)]
pub fn probe_srs<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    probes: &[P],
    blocks: usize,
    sparsity: usize,
    true_sparsity: usize,
    truth: &P,
    population_gradient: &dyn Fn(&P) -> Result<P>,
) -> Result<SrsEstimate> {
    if probes.is_empty() {
        return Err(Error::EmptyData("no probes".into()));
    }
    let oracle = MomOracle::new(BlockPartition::contiguous(data.n(), blocks)?);
    let width = 2 * sparsity + true_sparsity;
    let mut points = Vec::with_capacity(probes.len());
    for probe in probes {
        if probe.row_support_size() > sparsity {
            return Err(Error::invalid(format!(
                "probe has {} nonzero rows, more than s = {sparsity}",
                probe.row_support_size()
            )));
        }
        let g = oracle.estimate(model, data, probe)?.value;
        let pop = population_gradient(probe)?;
        let dev: Vec<f64> = g.as_flat().iter().zip(pop.as_flat()).map(|(a, b)| a - b).collect();
        points.push((probe.distance_to(truth), top_k_norm(&dev, probe.cols(), width)));
    }
    let (phi_mult, gamma_add) = fit_stability_envelope(&points)?;
    Ok(SrsEstimate { phi_mult, gamma_add, probe_count: probes.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrcgProbe {
    pub a_hat: f64,
    pub b_hat: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub supports_examined: usize,
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx)?;
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return Ok(());
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Sparse extreme eigenvalues of `sigma` over principal submatrices of size
/// `2(s + s*)`. Enumerates every support when `supports` covers them all,
/// otherwise samples `supports` of them uniformly.
pub fn probe_srcg(
    sigma: &DenseMatrix,
    sparsity: usize,
    true_sparsity: usize,
    supports: usize,
    rng: &mut RngStream,
) -> Result<SrcgProbe> {
    let p = sigma.rows();
    let scale = sigma.max_abs().max(1.0);
    if !sigma.is_symmetric(1e-12 * scale) {
        return Err(Error::invalid("covariance matrix is not symmetric"));
    }
    if p == 0 {
        return Err(Error::EmptyData("empty covariance".into()));
    }
    let k = (2 * (sparsity + true_sparsity)).clamp(1, p);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut examined = 0;
    let mut visit = |idx: &[usize]| -> Result<()> {
        let eig = symmetric_eigenvalues(&sigma.principal_submatrix(idx))?;
        lo = lo.min(eig[0]);
        hi = hi.max(eig[eig.len() - 1]);
        examined += 1;
        Ok(())
    };
    let total = binomial(p, k);
    if total.is_some_and(|t| t <= supports as u128) {
        for_each_combination(p, k, &mut visit)?;
    } else {
        let mut pool: Vec<usize> = (0..p).collect();
        for _ in 0..supports.max(1) {
            for i in 0..k {
                let j = i + rng.below(p - i);
                pool.swap(i, j);
            }
            let mut idx = pool[..k].to_vec();
            idx.sort_unstable();
            visit(&idx)?;
        }
    }
    Ok(SrcgProbe {
        a_hat: lo / (2.0 * hi * hi),
        b_hat: lo / 2.0,
        kappa_minus: lo,
        kappa_plus: hi,
        supports_examined: examined,
    })
}
