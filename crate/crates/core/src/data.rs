//! Regression datasets and synthetic instance generators.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::samplers::{sample_design, sample_noise, sample_noise_matrix, DistributionSpec, RngStream};

/// Row-major view shared by single- and multi-response data.
pub trait Observations: Sync {
    fn x(&self) -> &DenseMatrix;

    /// Response(s) of observation `i`; length [`Observations::responses`].
    fn y_row(&self, i: usize) -> &[f64];

    fn responses(&self) -> usize;

    fn n(&self) -> usize {
        self.x().rows()
    }

    fn p(&self) -> usize {
        self.x().cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: DenseVector,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: DenseVector) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dims(format!("{} responses", x.rows()), y.len()));
        }
        Ok(Dataset { x, y })
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let p = self.x.cols();
        let mut xs = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            xs.extend_from_slice(self.x.row(i));
        }
        Dataset {
            x: DenseMatrix::from_finite(rows.len(), p, xs),
            y: DenseVector::from_finite(rows.iter().map(|&i| self.y[i]).collect()),
        }
    }

    /// The single-response data as an `n x 1` multi-response dataset.
    pub fn to_multi(&self) -> MultiResponseDataset {
        MultiResponseDataset {
            x: self.x.clone(),
            y: self.y.to_column(),
        }
    }
}

impl Observations for Dataset {
    fn x(&self) -> &DenseMatrix {
        &self.x
    }

    fn y_row(&self, i: usize) -> &[f64] {
        std::slice::from_ref(&self.y.as_slice()[i])
    }

    fn responses(&self) -> usize {
        1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiResponseDataset {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl MultiResponseDataset {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::dims(format!("{} response rows", x.rows()), y.rows()));
        }
        Ok(MultiResponseDataset { x, y })
    }

    /// Single-response dataset for column `l`.
    pub fn column(&self, l: usize) -> Dataset {
        Dataset {
            x: self.x.clone(),
            y: self.y.column(l),
        }
    }

    pub fn subset(&self, rows: &[usize]) -> MultiResponseDataset {
        let (p, m) = (self.x.cols(), self.y.cols());
        let mut xs = Vec::with_capacity(rows.len() * p);
        let mut ys = Vec::with_capacity(rows.len() * m);
        for &i in rows {
            xs.extend_from_slice(self.x.row(i));
            ys.extend_from_slice(self.y.row(i));
        }
        MultiResponseDataset {
            x: DenseMatrix::from_finite(rows.len(), p, xs),
            y: DenseMatrix::from_finite(rows.len(), m, ys),
        }
    }
}

impl Observations for MultiResponseDataset {
    fn x(&self) -> &DenseMatrix {
        &self.x
    }

    fn y_row(&self, i: usize) -> &[f64] {
        self.y.row(i)
    }

    fn responses(&self) -> usize {
        self.y.cols()
    }
}

/// `y = X theta + eps`.
pub fn generate_linear(
    n: usize,
    theta: &DenseVector,
    design: &DistributionSpec,
    noise: &DistributionSpec,
    rng: &mut RngStream,
) -> Result<Dataset> {
    let x = sample_design(n, theta.len(), design, rng)?;
    let eps = sample_noise(n, noise, rng)?;
    let signal = x.matvec(theta)?;
    let y = DenseVector::new(signal.iter().zip(eps.iter()).map(|(s, e)| s + e).collect())?;
    Dataset::new(x, y)
}

/// Bernoulli responses with success probability `sigmoid(x^T theta)`.
pub fn generate_logistic(
    n: usize,
    theta: &DenseVector,
    design: &DistributionSpec,
    rng: &mut RngStream,
) -> Result<Dataset> {
    let x = sample_design(n, theta.len(), design, rng)?;
    let eta = x.matvec(theta)?;
    let y = eta
        .iter()
        .map(|&e| if rng.uniform() < crate::models::sigmoid(e) { 1.0 } else { 0.0 })
        .collect();
    Dataset::new(x, DenseVector::from_finite(y))
}

/// `Y = X Theta + E` with row-shared multivariate noise when requested.
pub fn generate_multi_response(
    n: usize,
    theta: &DenseMatrix,
    design: &DistributionSpec,
    noise: &DistributionSpec,
    rng: &mut RngStream,
) -> Result<MultiResponseDataset> {
    let x = sample_design(n, theta.rows(), design, rng)?;
    let e = sample_noise_matrix(n, theta.cols(), noise, rng)?;
    let signal = x.matmat(theta)?;
    let y = DenseMatrix::new(
        n,
        theta.cols(),
        signal.as_slice().iter().zip(e.as_slice()).map(|(s, e)| s + e).collect(),
    )?;
    MultiResponseDataset::new(x, y)
}

/// `(5, -5, 6, -6, 7, 0, ..., 0)` truncated or cycled to `s_star` entries.
pub fn standard_signal(p: usize, s_star: usize) -> DenseVector {
    const PATTERN: [f64; 5] = [5.0, -5.0, 6.0, -6.0, 7.0];
    let mut theta = vec![0.0; p];
    for (j, t) in theta.iter_mut().take(s_star).enumerate() {
        *t = PATTERN[j % PATTERN.len()];
    }
    DenseVector::from_finite(theta)
}
