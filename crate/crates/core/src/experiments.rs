//! Monte-Carlo harness: error-rate sweeps over the noise tail, gradient
//! error sweeps over the design tail, and paired method comparisons.
//!
//! Every trial draws its data from `RngStream::new(seed, trial)` where `seed`
//! is derived from the master seed, the tail index and the sample size, so
//! results do not depend on scheduling. Errors are averaged over trials
//! before taking logs.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{huber_solve, lasso_solve, shrinkage_solve, train_validation_split, HuberConfig, LassoConfig, ShrinkageConfig};
use crate::data::{generate_linear, standard_signal, Dataset};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::linalg::{DenseVector, Parameter};
use crate::models::Model;
use crate::mom::{mom_gradient, BlockPartition};
use crate::samplers::{Distribution, DistributionSpec, RngStream};
use crate::solvers::{block_count, iht_solve, right_solve, BlockRule, RightConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    Gradient,
    Comparison,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Right,
    Iht,
    Lasso,
    Huber,
    Shrinkage,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Right => "right",
            Method::Iht => "iht",
            Method::Lasso => "lasso",
            Method::Huber => "huber",
            Method::Shrinkage => "shrinkage",
        }
    }

    /// Name used for records of the gradient experiment.
    const MOM_GRADIENT: &'static str = "mom_gradient";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// Noise with finite `(1 + delta)`-th moment; exponent of the error rate.
    Noise,
    /// Design with finite `(2 + 2 lambda)`-th moment; exponent of the gradient error.
    DesignGradient,
    /// Design tail; exponent of the sample complexity in the sparsity.
    DesignSampleComplexity,
}

/// Theoretical exponent for a tail index: `min(d/(1+d), 1/2)` for the noise
/// rate and the gradient error, `max((1+l)/(2l), 1)` for sample complexity.
pub fn expected_exponent(kind: TailKind, index: f64) -> Result<f64> {
    if !(index > 0.0) {
        return Err(Error::invalid(format!("tail index must be positive, got {index}")));
    }
    Ok(match kind {
        TailKind::Noise | TailKind::DesignGradient => (index / (1.0 + index)).min(0.5),
        TailKind::DesignSampleComplexity => ((1.0 + index) / (2.0 * index)).max(1.0),
    })
}

/// Moment index just inside what a t law with `dof` degrees of freedom
/// has: `dof - 1.05` for noise, `(dof - 2) / 2 - 0.01` for designs.
pub fn tail_index(kind: TailKind, dof: f64) -> f64 {
    match kind {
        TailKind::Noise => dof - 1.05,
        TailKind::DesignGradient | TailKind::DesignSampleComplexity => (dof - 2.0) / 2.0 - 0.01,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln n, ln mean error)` pairs the line was fit to.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least-squares line through `points`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::invalid(format!("slope fit needs at least 2 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::invalid("slope fit needs at least 2 distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy <= 1e-300 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept, r_squared, points: points.to_vec() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub p: usize,
    pub s_star: usize,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub design: DistributionSpec,
    pub noise: DistributionSpec,
    /// Degrees of freedom swept over. They replace the dof of the noise for
    /// rate runs and of the design for gradient runs; comparisons use the
    /// specs as given when this is empty.
    pub tail_dofs: Vec<f64>,
    pub sparsity: usize,
    pub step_size: f64,
    pub iht_step_size: f64,
    pub iterations: usize,
    pub block_rule: BlockRule,
    /// Multipliers `c` in the block rule; more than one is chosen by validation.
    pub block_scales: Vec<f64>,
    pub methods: Vec<Method>,
    /// Error recorded for diverged fits.
    pub censor_at: f64,
    /// Point at which the gradient experiment evaluates the oracle.
    pub probe: Option<Vec<f64>>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::rate(Preset::Desk)
    }
}

const DESK_N: [usize; 6] = [300, 600, 1200, 2400, 4800, 8000];

impl ExperimentSpec {
    /// Error-rate sweep over the noise tail with a Gaussian design.
    pub fn rate(preset: Preset) -> Self {
        let (p, n_grid, trials, tail_dofs) = match preset {
            Preset::Desk => (200, DESK_N.to_vec(), 30, vec![1.4, 1.8, 6.0]),
            Preset::Paper => (
                600,
                vec![300, 700, 1600, 3800, 8700, 20006],
                100,
                vec![1.2, 1.4, 1.6, 1.8, 2.5, 6.0],
            ),
        };
        ExperimentSpec {
            name: "rate".into(),
            kind: ExperimentKind::Rate,
            p,
            s_star: 5,
            n_grid,
            trials,
            seed: 20240101,
            design: DistributionSpec::gaussian(),
            noise: DistributionSpec::student_t(1.4),
            tail_dofs,
            sparsity: 10,
            step_size: 0.02,
            iht_step_size: 0.001,
            iterations: 250,
            block_rule: BlockRule::PLogN,
            block_scales: vec![1.0],
            methods: vec![Method::Right],
            censor_at: 1e6,
            probe: None,
        }
    }

    /// MoM gradient error sweep over the design tail with Gaussian noise.
    pub fn gradient(preset: Preset) -> Self {
        let (p, n_grid, trials, tail_dofs) = match preset {
            Preset::Desk => (200, DESK_N.to_vec(), 100, vec![2.4, 3.2, 22.0]),
            Preset::Paper => (
                600,
                vec![300, 600, 1200, 2400, 4800, 9000],
                100,
                vec![2.2, 2.4, 2.8, 3.2, 3.6, 22.0, 32.0],
            ),
        };
        ExperimentSpec {
            name: "grad".into(),
            kind: ExperimentKind::Gradient,
            p,
            n_grid,
            trials,
            tail_dofs,
            design: DistributionSpec::multivariate_t(3.2),
            noise: DistributionSpec::gaussian(),
            ..ExperimentSpec::rate(preset)
        }
    }

    /// Paired comparison of all methods under heavy design and noise.
    pub fn comparison(preset: Preset) -> Self {
        let (p, n_grid, trials) = match preset {
            Preset::Desk => (200, vec![1000, 2000, 4000], 50),
            Preset::Paper => (600, vec![1000, 2000, 4000, 8000], 100),
        };
        ExperimentSpec {
            name: "compare".into(),
            kind: ExperimentKind::Comparison,
            p,
            n_grid,
            trials,
            tail_dofs: Vec::new(),
            design: DistributionSpec::multivariate_t(2.5),
            noise: DistributionSpec::student_t(1.5),
            step_size: 0.01,
            iht_step_size: 0.001,
            iterations: 300,
            block_rule: BlockRule::PLogNOverLogP,
            block_scales: vec![0.5, 1.0, 2.0],
            methods: vec![Method::Right, Method::Iht, Method::Lasso, Method::Huber, Method::Shrinkage],
            ..ExperimentSpec::rate(preset)
        }
    }

    pub fn preset(kind: ExperimentKind, preset: Preset) -> Self {
        match kind {
            ExperimentKind::Rate => Self::rate(preset),
            ExperimentKind::Gradient => Self::gradient(preset),
            ExperimentKind::Comparison => Self::comparison(preset),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be non-empty and strictly ascending".into()));
        }
        if self.s_star > self.p || self.p == 0 {
            return Err(Error::Config(format!("need 0 < s_star <= p, got s_star={} p={}", self.s_star, self.p)));
        }
        if self.block_scales.is_empty() {
            return Err(Error::Config("block_scales must not be empty".into()));
        }
        if self.kind != ExperimentKind::Comparison && self.tail_dofs.is_empty() {
            return Err(Error::Config("tail_dofs must not be empty".into()));
        }
        if let Some(probe) = &self.probe {
            if probe.len() != self.p {
                return Err(Error::dims(self.p, probe.len()));
            }
        }
        Ok(())
    }

    pub fn truth(&self) -> DenseVector {
        standard_signal(self.p, self.s_star)
    }

    /// `(0, 0, 0, 0, 0, 5, -5, 6, -6, 7, 0, ...)` unless overridden.
    pub fn probe_point(&self) -> Result<DenseVector> {
        match &self.probe {
            Some(v) => DenseVector::new(v.clone()),
            None => {
                let shifted = standard_signal(self.p.saturating_sub(5), self.s_star);
                let mut v = vec![0.0; self.p];
                v[self.p.min(5)..].copy_from_slice(&shifted[..self.p.saturating_sub(5)]);
                DenseVector::new(v)
            }
        }
    }

    /// Number of tail settings, treating an empty sweep as one fixed setting.
    fn tail_count(&self) -> usize {
        self.tail_dofs.len().max(1)
    }

    fn tail_kind(&self) -> TailKind {
        match self.kind {
            ExperimentKind::Rate | ExperimentKind::Comparison => TailKind::Noise,
            ExperimentKind::Gradient => TailKind::DesignGradient,
        }
    }

    /// Design and noise laws for tail setting `t`.
    fn laws(&self, t: usize) -> (DistributionSpec, DistributionSpec) {
        let Some(&dof) = self.tail_dofs.get(t) else {
            return (self.design, self.noise);
        };
        match self.kind {
            ExperimentKind::Gradient => (with_dof(self.design, dof), self.noise),
            _ => (self.design, with_dof(self.noise, dof)),
        }
    }

    fn tail_param(&self, t: usize) -> f64 {
        let kind = self.tail_kind();
        match self.tail_dofs.get(t) {
            Some(&dof) => tail_index(kind, dof),
            None => match self.noise.kind {
                Distribution::StudentT { dof } | Distribution::MultivariateT { dof } => tail_index(kind, dof),
                _ => f64::INFINITY,
            },
        }
    }
}

/// Replaces the degrees of freedom of a t law; other laws become Student-t.
fn with_dof(spec: DistributionSpec, dof: f64) -> DistributionSpec {
    let kind = match spec.kind {
        Distribution::MultivariateT { .. } => Distribution::MultivariateT { dof },
        _ => Distribution::StudentT { dof },
    };
    DistributionSpec { kind, ..spec }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed shared by all trials of one (tail setting, sample size) cell.
pub fn cell_seed(master: u64, tail: usize, n: usize) -> u64 {
    mix(mix(master ^ mix(tail as u64)) ^ n as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub method: String,
    pub tail_param: f64,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: f64,
    pub wall_ms: f64,
    /// Not written to CSV; true when the error was censored.
    #[serde(skip)]
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub tail_param: f64,
    pub n: usize,
    pub mean_error: f64,
    pub diverged: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodFit {
    pub method: String,
    pub tail_param: f64,
    /// Theoretical slope `-exponent` for this tail index.
    pub expected_slope: f64,
    pub fit: SlopeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub curves: Vec<CurvePoint>,
    pub fits: Vec<MethodFit>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl ExperimentOutcome {
    /// Fit for `method` at the tail setting closest to `tail_param`.
    pub fn fit_for(&self, method: &str, tail_param: f64) -> Option<&MethodFit> {
        self.fits
            .iter()
            .filter(|f| f.method == method)
            .min_by(|a, b| (a.tail_param - tail_param).abs().total_cmp(&(b.tail_param - tail_param).abs()))
    }

    pub fn mean_error(&self, method: &str, n: usize) -> Option<f64> {
        self.curves.iter().find(|c| c.method == method && c.n == n).map(|c| c.mean_error)
    }
}

/// Groups records into per-(method, tail, n) means and, with at least
/// `min_points` sample sizes, log-log slope fits.
pub fn summarize(records: &[TrialRecord], kind: TailKind, min_points: usize) -> Result<(Vec<CurvePoint>, Vec<MethodFit>)> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(m, t)| *m == r.method && t.to_bits() == r.tail_param.to_bits()) {
            keys.push((r.method.clone(), r.tail_param));
        }
    }
    let mut curves = Vec::new();
    let mut fits = Vec::new();
    for (method, tail) in keys {
        let mut ns: Vec<usize> = records
            .iter()
            .filter(|r| r.method == method && r.tail_param.to_bits() == tail.to_bits())
            .map(|r| r.n)
            .collect();
        ns.sort_unstable();
        ns.dedup();
        let mut points = Vec::new();
        for n in ns {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.tail_param.to_bits() == tail.to_bits() && r.n == n)
                .collect();
            let mean_error = cell.iter().map(|r| r.error).sum::<f64>() / cell.len() as f64;
            points.push(((n as f64).ln(), mean_error.ln()));
            curves.push(CurvePoint {
                method: method.clone(),
                tail_param: tail,
                n,
                mean_error,
                diverged: cell.iter().filter(|r| r.diverged).count(),
                trials: cell.len(),
            });
        }
        if points.len() >= min_points.max(2) {
            let expected_slope = if tail.is_finite() { -expected_exponent(kind, tail)? } else { -0.5 };
            fits.push(MethodFit { method, tail_param: tail, expected_slope, fit: fit_slope(&points)? });
        }
    }
    Ok((curves, fits))
}

struct Cell {
    tail: usize,
    n: usize,
    trial: usize,
}

fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for tail in 0..spec.tail_count() {
        for &n in &spec.n_grid {
            for trial in 0..spec.trials {
                out.push(Cell { tail, n, trial });
            }
        }
    }
    out
}

fn censor(result: Result<f64>, cap: f64) -> Result<(f64, bool)> {
    match result {
        Ok(e) if e.is_finite() && e < cap => Ok((e, false)),
        Ok(_) | Err(Error::Diverged { .. }) => Ok((cap, true)),
        Err(e) => Err(e),
    }
}

fn run_cells(
    spec: &ExperimentSpec,
    trial_fn: impl Fn(&Cell, u64) -> Result<Vec<(Method, Result<f64>, f64)>> + Sync,
    method_name: Option<&str>,
) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let jobs = cells(spec);
    let nested: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|cell| {
            let seed = cell_seed(spec.seed, cell.tail, cell.n);
            let mut out = Vec::new();
            for (method, result, wall_ms) in trial_fn(cell, seed)? {
                let (error, diverged) = censor(result, spec.censor_at)?;
                out.push(TrialRecord {
                    experiment: spec.name.clone(),
                    method: method_name.unwrap_or(method.name()).to_string(),
                    tail_param: spec.tail_param(cell.tail),
                    n: cell.n,
                    trial: cell.trial,
                    seed,
                    error,
                    wall_ms,
                    diverged,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn generate(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> Result<Dataset> {
    let (design, noise) = spec.laws(cell.tail);
    let mut rng = RngStream::new(seed, cell.trial as u64);
    generate_linear(cell.n, &spec.truth(), &design, &noise, &mut rng)
}

fn fit_right(spec: &ExperimentSpec, data: &Dataset, scale: f64) -> Result<DenseVector> {
    let blocks = block_count(spec.block_rule, data.x.rows(), spec.p, scale);
    let cfg = RightConfig::new(DenseVector::zeros(spec.p), spec.sparsity, spec.step_size, spec.iterations, blocks);
    Ok(right_solve(Model::Linear, data, &cfg, None)?.estimate)
}

/// Picks the block multiplier with the lowest validation MSE on an 80/20
/// split, then refits on all rows.
fn fit_right_validated(spec: &ExperimentSpec, data: &Dataset, seed: u64) -> Result<DenseVector> {
    if spec.block_scales.len() == 1 {
        return fit_right(spec, data, spec.block_scales[0]);
    }
    let (train, valid) = train_validation_split(data.x.rows(), 0.8, seed)?;
    let (train, valid) = (data.subset(&train), data.subset(&valid));
    let mut best = (f64::INFINITY, spec.block_scales[0]);
    for &c in &spec.block_scales {
        let mse = match fit_right(spec, &train, c) {
            Ok(theta) => {
                let pred = valid.x.matvec(&theta)?;
                pred.iter().zip(valid.y.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pred.len() as f64
            }
            Err(Error::Diverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if mse < best.0 {
            best = (mse, c);
        }
    }
    fit_right(spec, data, best.1)
}

fn estimation_error(spec: &ExperimentSpec, theta: Result<DenseVector>) -> Result<f64> {
    theta.map(|t| t.distance_to(&spec.truth()))
}

/// Final-iterate error of the robust solver for every (noise tail, n, trial).
pub fn run_rate_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let records = run_cells(
        spec,
        |cell, seed| {
            let data = generate(spec, cell, seed)?;
            let (theta, ms) = timed(|| fit_right(spec, &data, spec.block_scales[0]));
            Ok(vec![(Method::Right, estimation_error(spec, theta), ms)])
        },
        None,
    )?;
    finish(spec, records, 3)
}

/// Error of the MoM gradient against the population gradient
/// `Sigma (theta - theta*)` at the probe point, for every (design tail, n, trial).
pub fn run_gradient_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let probe = spec.probe_point()?;
    let truth = spec.truth();
    let records = run_cells(
        spec,
        |cell, seed| {
            let data = generate(spec, cell, seed)?;
            let (design, _) = spec.laws(cell.tail);
            let variance = design
                .variance()
                .ok_or_else(|| Error::Config("gradient experiment needs a design with finite variance".into()))?;
            let (err, ms) = timed(|| -> Result<f64> {
                let k = block_count(spec.block_rule, cell.n, spec.p, spec.block_scales[0]);
                let g = mom_gradient(Model::Linear, &data, &probe, k, &BlockPartition::contiguous(cell.n, k)?)?;
                let pop: Vec<f64> = probe.iter().zip(truth.iter()).map(|(a, b)| variance * (a - b)).collect();
                Ok(g.value.iter().zip(&pop).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            });
            Ok(vec![(Method::Right, err, ms)])
        },
        Some(Method::MOM_GRADIENT),
    )?;
    finish(spec, records, 3)
}

/// Paired comparison: every method sees the same data in each trial.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    if spec.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let records = run_cells(
        spec,
        |cell, seed| {
            let data = generate(spec, cell, seed)?;
            let fit_seed = seed ^ cell.trial as u64;
            let mut out = Vec::new();
            for &method in &spec.methods {
                let (theta, ms) = timed(|| -> Result<DenseVector> {
                    match method {
                        Method::Right => fit_right_validated(spec, &data, fit_seed),
                        Method::Iht => {
                            let cfg = RightConfig::new(
                                DenseVector::zeros(spec.p),
                                spec.sparsity,
                                spec.iht_step_size,
                                spec.iterations,
                                1,
                            );
                            Ok(iht_solve(Model::Linear, &data, &cfg, None)?.estimate)
                        }
                        Method::Lasso => Ok(lasso_solve(&data, &LassoConfig { seed: fit_seed, ..Default::default() })?.theta),
                        Method::Huber => Ok(huber_solve(&data, &HuberConfig { seed: fit_seed, ..Default::default() })?.theta),
                        Method::Shrinkage => {
                            let cfg = ShrinkageConfig {
                                lasso: LassoConfig { seed: fit_seed, ..Default::default() },
                                ..Default::default()
                            };
                            Ok(shrinkage_solve(&data, &cfg)?.theta)
                        }
                    }
                });
                out.push((method, estimation_error(spec, theta), ms));
            }
            Ok(out)
        },
        None,
    )?;
    finish(spec, records, 2)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    match spec.kind {
        ExperimentKind::Rate => run_rate_experiment(spec),
        ExperimentKind::Gradient => run_gradient_experiment(spec),
        ExperimentKind::Comparison => run_comparison(spec),
    }
}

fn finish(spec: &ExperimentSpec, records: Vec<TrialRecord>, min_points: usize) -> Result<ExperimentOutcome> {
    let (curves, fits) = summarize(&records, spec.tail_kind(), min_points)?;
    Ok(ExperimentOutcome { schema_version: SCHEMA_VERSION, spec: spec.clone(), curves, fits, records })
}

/// CSV with a schema comment line followed by a header row.
pub fn records_to_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut buf = format!("# robust-sparse trial records, schema_version={SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in records {
            w.serialize(r).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io { path: "<buffer>".into(), source: e })?;
    }
    Ok(buf)
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>_summary.json`.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
    write_atomic(&dir.join(format!("{stem}.csv")), &records_to_csv(&outcome.records)?)?;
    let json = serde_json::to_vec_pretty(outcome).map_err(|e| Error::Data(e.to_string()))?;
    write_atomic(&dir.join(format!("{stem}_summary.json")), &json)
}
