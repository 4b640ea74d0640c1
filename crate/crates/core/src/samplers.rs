//! Seeded generators for heavy-tailed designs and noise, plus the two
//! adversarial mixtures used to probe mean-estimation floors.
//!
//! Student-t draws are built as `N(0,1) / sqrt(chi2_nu / nu)`. The chi-square
//! variate is a sum of squared normals for small integer `nu` and a gamma
//! draw otherwise. A multivariate t row shares one chi-square divisor across
//! all of its coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// Integer degrees of freedom up to this value use the sum-of-squares chi-square.
const MAX_EXACT_DOF: f64 = 64.0;

/// Deterministic random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { rng, stream_id }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    fn chi_square(&mut self, dof: f64) -> f64 {
        if dof.fract() == 0.0 && dof <= MAX_EXACT_DOF {
            (0..dof as usize).map(|_| self.normal().powi(2)).sum()
        } else {
            // dof > 0 is checked by every public entry point
            let gamma = Gamma::new(dof / 2.0, 2.0).expect("positive shape");
            gamma.sample(&mut self.rng)
        }
    }

    /// `sqrt(chi2_nu / nu)`, the per-draw divisor of a t variate.
    fn t_divisor(&mut self, dof: f64) -> f64 {
        (self.chi_square(dof) / dof).sqrt()
    }

    pub fn student_t(&mut self, dof: f64) -> f64 {
        let z = self.normal();
        z / self.t_divisor(dof)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian,
    StudentT { dof: f64 },
    /// Rows share one chi-square divisor; as a scalar law this is Student-t.
    MultivariateT { dof: f64 },
    /// `atom` with probability `alpha`, zero otherwise.
    TwoPointMixture { alpha: f64, atom: f64 },
    /// `(1 - gamma) N(0,1) + gamma N(shift, 1)`.
    GaussianShiftMixture { gamma: f64, shift: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Gaussian => Ok(()),
            Distribution::StudentT { dof } | Distribution::MultivariateT { dof } => {
                if dof > 0.0 && dof.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("degrees of freedom must be positive, got {dof}")))
                }
            }
            Distribution::TwoPointMixture { alpha: prob, .. }
            | Distribution::GaussianShiftMixture { gamma: prob, .. } => {
                if (0.0..=1.0).contains(&prob) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("mixing probability {prob} not in [0, 1]")))
                }
            }
        }
    }

    /// Per-coordinate variance of the unscaled law, when finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Distribution::Gaussian => Some(1.0),
            Distribution::StudentT { dof } | Distribution::MultivariateT { dof } => {
                (dof > 2.0).then(|| dof / (dof - 2.0))
            }
            Distribution::TwoPointMixture { alpha, atom } => Some(alpha * (1.0 - alpha) * atom * atom),
            Distribution::GaussianShiftMixture { gamma, shift } => {
                Some(1.0 + gamma * (1.0 - gamma) * shift * shift)
            }
        }
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Distribution::Gaussian => rng.normal(),
            Distribution::StudentT { dof } | Distribution::MultivariateT { dof } => rng.student_t(dof),
            Distribution::TwoPointMixture { alpha, atom } => {
                if rng.uniform() < alpha {
                    atom
                } else {
                    0.0
                }
            }
            Distribution::GaussianShiftMixture { gamma, shift } => {
                let z = rng.normal();
                if rng.uniform() < gamma {
                    z + shift
                } else {
                    z
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub kind: Distribution,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl DistributionSpec {
    pub fn new(kind: Distribution) -> Self {
        DistributionSpec { kind, scale: 1.0, seed: 0 }
    }

    pub fn gaussian() -> Self {
        Self::new(Distribution::Gaussian)
    }

    pub fn student_t(dof: f64) -> Self {
        Self::new(Distribution::StudentT { dof })
    }

    pub fn multivariate_t(dof: f64) -> Self {
        Self::new(Distribution::MultivariateT { dof })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stream(&self, stream_id: u64) -> RngStream {
        RngStream::new(self.seed, stream_id)
    }

    /// Covariance multiplier of one coordinate (`scale^2 * variance`).
    pub fn variance(&self) -> Option<f64> {
        self.kind.variance().map(|v| v * self.scale * self.scale)
    }

    fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Draws an `n x p` matrix. Multivariate t rows are `z / sqrt(chi2/nu)` with
/// one divisor per row; every other law is drawn entrywise.
pub fn sample_design(n: usize, p: usize, spec: &DistributionSpec, rng: &mut RngStream) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut data = Vec::with_capacity(n * p);
    match spec.kind {
        Distribution::MultivariateT { dof } => {
            for _ in 0..n {
                let divisor = rng.t_divisor(dof);
                for _ in 0..p {
                    data.push(spec.scale * rng.normal() / divisor);
                }
            }
        }
        kind => {
            for _ in 0..n * p {
                data.push(spec.scale * kind.draw(rng));
            }
        }
    }
    DenseMatrix::new(n, p, data)
}

pub fn sample_noise(n: usize, spec: &DistributionSpec, rng: &mut RngStream) -> Result<DenseVector> {
    spec.validate()?;
    let data = (0..n).map(|_| spec.scale * spec.kind.draw(rng)).collect();
    DenseVector::new(data)
}

/// Multi-response noise; multivariate t rows share a divisor across responses.
pub fn sample_noise_matrix(n: usize, m: usize, spec: &DistributionSpec, rng: &mut RngStream) -> Result<DenseMatrix> {
    sample_design(n, m, spec, rng)
}

pub fn sample_two_point(n: usize, alpha: f64, atom: f64, rng: &mut RngStream) -> Result<DenseVector> {
    sample_noise(n, &DistributionSpec::new(Distribution::TwoPointMixture { alpha, atom }), rng)
}

pub fn sample_gaussian_shift_mixture(n: usize, gamma: f64, shift: f64, rng: &mut RngStream) -> Result<DenseVector> {
    sample_noise(n, &DistributionSpec::new(Distribution::GaussianShiftMixture { gamma, shift }), rng)
}
