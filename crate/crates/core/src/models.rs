//! Per-sample losses and gradients. No intercept term anywhere: data are
//! assumed centered.
//!
//! Every model's per-sample gradient factors as `x r^T`, where the residual
//! `r` has one entry per response column. The oracles in [`crate::mom`] only
//! need [`Model::residual`], which keeps the hot loop model-agnostic.

use serde::{Deserialize, Serialize};

use crate::data::Observations;
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, DenseVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Linear,
    Logistic,
    MultiResponse,
}

/// Numerically stable logistic function.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
pub fn log_partition(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

impl Model {
    /// Response columns the model expects for `m` columns of data.
    fn check_shapes(&self, p: usize, m: usize, theta_len: usize) -> Result<()> {
        match self {
            Model::Linear | Model::Logistic if m != 1 => {
                Err(Error::dims("1 response column", m))
            }
            _ if theta_len != p * m => Err(Error::dims(format!("{p}x{m} parameter"), theta_len)),
            _ => Ok(()),
        }
    }

    /// Checks that `data` and a `p x m` parameter fit this model.
    pub fn validate<D: Observations + ?Sized>(&self, data: &D, theta_len: usize) -> Result<()> {
        self.check_shapes(data.p(), data.responses(), theta_len)?;
        if *self == Model::Logistic {
            for i in 0..data.n() {
                let y = data.y_row(i)[0];
                if y != 0.0 && y != 1.0 {
                    return Err(Error::Data(format!("logistic label {y} at row {i} is not 0 or 1")));
                }
            }
        }
        Ok(())
    }

    /// Writes the per-sample residual `r` into `out` (length `m`), reading only
    /// the parameter rows listed in `rows`; all other rows must be zero.
    #[inline]
    pub(crate) fn residual(&self, x: &[f64], y: &[f64], theta: &[f64], rows: &[usize], out: &mut [f64]) {
        let m = out.len();
        match self {
            Model::Linear => {
                let eta: f64 = rows.iter().map(|&j| x[j] * theta[j]).sum();
                out[0] = eta - y[0];
            }
            Model::Logistic => {
                let eta: f64 = rows.iter().map(|&j| x[j] * theta[j]).sum();
                out[0] = sigmoid(eta) - y[0];
            }
            Model::MultiResponse => {
                for (l, r) in out.iter_mut().enumerate() {
                    let eta: f64 = rows.iter().map(|&j| x[j] * theta[j * m + l]).sum();
                    *r = eta - y[l];
                }
            }
        }
    }

    /// Per-sample gradient as a flat `p x m` buffer.
    pub fn sample_gradient(&self, x: &[f64], y: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let m = y.len();
        self.check_shapes(x.len(), m, theta.len())?;
        if *self == Model::Logistic && y[0] != 0.0 && y[0] != 1.0 {
            return Err(Error::Data(format!("logistic label {} is not 0 or 1", y[0])));
        }
        let rows: Vec<usize> = (0..x.len()).collect();
        let mut r = vec![0.0; m];
        self.residual(x, y, theta, &rows, &mut r);
        let mut g = vec![0.0; x.len() * m];
        accumulate_outer(x, &r, &mut g);
        Ok(g)
    }

    pub fn loss(&self, x: &[f64], y: &[f64], theta: &[f64]) -> Result<f64> {
        let m = y.len();
        self.check_shapes(x.len(), m, theta.len())?;
        Ok(match self {
            Model::Linear => 0.5 * (y[0] - dot(x, theta)).powi(2),
            Model::Logistic => {
                if y[0] != 0.0 && y[0] != 1.0 {
                    return Err(Error::Data(format!("logistic label {} is not 0 or 1", y[0])));
                }
                let eta = dot(x, theta);
                log_partition(eta) - y[0] * eta
            }
            Model::MultiResponse => {
                0.5 * (0..m)
                    .map(|l| {
                        let eta: f64 = x.iter().enumerate().map(|(j, xj)| xj * theta[j * m + l]).sum();
                        (y[l] - eta).powi(2)
                    })
                    .sum::<f64>()
            }
        })
    }

    /// Average loss over a dataset.
    pub fn empirical_loss<D: Observations + ?Sized>(&self, data: &D, theta: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..data.n() {
            total += self.loss(data.x().row(i), data.y_row(i), theta)?;
        }
        Ok(total / data.n() as f64)
    }
}

/// `g += x r^T` on a row-major `p x m` buffer.
#[inline]
pub(crate) fn accumulate_outer(x: &[f64], r: &[f64], g: &mut [f64]) {
    let m = r.len();
    if m == 1 {
        let r0 = r[0];
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += xj * r0;
        }
    } else {
        for (j, xj) in x.iter().enumerate() {
            for (l, rl) in r.iter().enumerate() {
                g[j * m + l] += xj * rl;
            }
        }
    }
}

/// `(x^T theta - y) x`
pub fn linear_gradient(x: &DenseVector, y: f64, theta: &DenseVector) -> Result<DenseVector> {
    if x.len() != theta.len() {
        return Err(Error::dims(x.len(), theta.len()));
    }
    DenseVector::new(Model::Linear.sample_gradient(x, &[y], theta)?)
}

/// `(sigmoid(x^T theta) - y) x` for `y` in `{0, 1}`.
pub fn logistic_gradient(x: &DenseVector, y: f64, theta: &DenseVector) -> Result<DenseVector> {
    if x.len() != theta.len() {
        return Err(Error::dims(x.len(), theta.len()));
    }
    DenseVector::new(Model::Logistic.sample_gradient(x, &[y], theta)?)
}

/// `x (x^T Theta - y^T)`, a `p x m` matrix.
pub fn multi_gradient(x: &DenseVector, y: &DenseVector, theta: &DenseMatrix) -> Result<DenseMatrix> {
    if theta.rows() != x.len() || theta.cols() != y.len() {
        return Err(Error::dims(
            format!("{}x{}", x.len(), y.len()),
            format!("{}x{}", theta.rows(), theta.cols()),
        ));
    }
    let g = Model::MultiResponse.sample_gradient(x, y, theta.as_slice())?;
    DenseMatrix::new(x.len(), y.len(), g)
}
