//! Dense vectors and matrices, support sets, and the hard-thresholding
//! projections shared by every solver.
//!
//! Storage is row-major and dense throughout. Constructors reject NaN and
//! infinite entries so that overflow in a sampler or a diverging iterate
//! surfaces as an error instead of silently propagating.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(DenseVector(entries))
    }

    pub fn zeros(len: usize) -> Self {
        DenseVector(vec![0.0; len])
    }

    /// Wraps a buffer the caller has already checked for finiteness.
    pub(crate) fn from_finite(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        DenseVector(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::dims(self.len(), other.len()));
        }
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        if self.len() != other.len() {
            return Err(Error::dims(self.len(), other.len()));
        }
        Ok(DenseVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn distance(&self, other: &DenseVector) -> Result<f64> {
        Ok(self.sub(other)?.norm_l2())
    }

    /// Views the vector as a `len x 1` matrix.
    pub fn to_column(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.len(),
            cols: 1,
            data: self.0.clone(),
        }
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DenseVector::new(v)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Vec<f64> {
        v.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dims(
                format!("{rows}x{cols} = {} entries", rows * cols),
                data.len(),
            ));
        }
        check_finite(&data)?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub(crate) fn from_finite(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        DenseMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        check_finite(diag)?;
        let n = diag.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dims(cols, bad.len()));
        }
        DenseMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Result<DenseVector> {
        if v.len() != self.cols {
            return Err(Error::dims(self.cols, v.len()));
        }
        Ok(DenseVector(
            (0..self.rows).map(|i| dot(self.row(i), v)).collect(),
        ))
    }

    /// Computes `self^T v`.
    pub fn transpose_matvec(&self, v: &[f64]) -> Result<DenseVector> {
        if v.len() != self.rows {
            return Err(Error::dims(self.rows, v.len()));
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            axpy(*vi, self.row(i), &mut out);
        }
        Ok(DenseVector(out))
    }

    pub fn matmat(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a != 0.0 {
                    axpy(*a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of row l2 norms.
    pub fn norm_2_1(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol)
        })
    }

    /// Principal submatrix on the given indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let k = idx.len();
        let mut out = DenseMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * k + b] = self.get(i, j);
            }
        }
        out
    }

    pub fn nonzero_rows(&self) -> usize {
        (0..self.rows)
            .filter(|&i| self.row(i).iter().any(|v| *v != 0.0))
            .count()
    }
}

/// Sorted, duplicate-free coordinate indices within `[0, dim)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
    dim: usize,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::IndexOutOfRange { index: bad, dim });
        }
        Ok(SupportSet { indices, dim })
    }

    pub fn all(dim: usize) -> Self {
        SupportSet {
            indices: (0..dim).collect(),
            dim,
        }
    }

    /// Support of the nonzero entries of `v`.
    pub fn of(v: &[f64]) -> Self {
        SupportSet {
            indices: nonzero_indices(v),
            dim: v.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

pub fn restrict(v: &DenseVector, support: &SupportSet) -> Result<DenseVector> {
    if support.dim() != v.len() {
        return Err(Error::dims(v.len(), support.dim()));
    }
    Ok(DenseVector(support.indices().iter().map(|&i| v[i]).collect()))
}

/// Inverse of [`restrict`]: places `values` on `support`, zero elsewhere.
pub fn scatter(values: &DenseVector, support: &SupportSet) -> Result<DenseVector> {
    if values.len() != support.len() {
        return Err(Error::dims(support.len(), values.len()));
    }
    let mut out = vec![0.0; support.dim()];
    for (v, &i) in values.iter().zip(support.indices()) {
        out[i] = *v;
    }
    Ok(DenseVector(out))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn nonzero_indices(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Keeps the `s` entries of largest magnitude; ties go to the lower index.
pub fn hard_threshold(v: &DenseVector, s: usize) -> DenseVector {
    let mut out = v.clone();
    threshold_rows_in_place(&mut out.0, 1, s);
    out
}

/// Keeps the `s` rows of largest l2 norm; ties go to the lower row index.
pub fn row_hard_threshold(m: &DenseMatrix, s: usize) -> DenseMatrix {
    let mut out = m.clone();
    threshold_rows_in_place(&mut out.data, m.cols, s);
    out
}

/// In-place row thresholding on a row-major buffer with `cols` columns.
/// With `cols == 1` rows are ranked by absolute value, so the vector and
/// single-column matrix paths select identical supports.
pub(crate) fn threshold_rows_in_place(data: &mut [f64], cols: usize, s: usize) {
    if cols == 0 {
        return;
    }
    let rows = data.len() / cols;
    let key = |i: usize| -> f64 {
        let row = &data[i * cols..(i + 1) * cols];
        if cols == 1 {
            row[0].abs()
        } else {
            row.iter().map(|v| v * v).sum()
        }
    };
    let mut live: Vec<(f64, usize)> = (0..rows)
        .map(|i| (key(i), i))
        .filter(|(k, _)| *k != 0.0)
        .collect();
    if live.len() <= s {
        return;
    }
    let by_rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
    };
    if s > 0 {
        live.select_nth_unstable_by(s - 1, by_rank);
    }
    for &(_, i) in &live[s..] {
        data[i * cols..(i + 1) * cols].fill(0.0);
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::dims(format!("square, {n} rows"), m.cols()));
    }
    let mut a = m.data.clone();
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[idx(i, j)] * a[idx(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[idx(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig)
}

/// Largest eigenvalue of `X^T X / n` by power iteration, without forming the Gram matrix.
pub fn gram_spectral_norm(x: &DenseMatrix, iterations: usize) -> f64 {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    let mut xv = vec![0.0; n];
    for _ in 0..iterations {
        for (i, out) in xv.iter_mut().enumerate() {
            *out = dot(x.row(i), &v);
        }
        let mut w = vec![0.0; p];
        for (i, xi) in xv.iter().enumerate() {
            axpy(*xi, x.row(i), &mut w);
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / n as f64;
        w.iter_mut().for_each(|a| *a /= norm);
        v = w;
        if (next - lambda).abs() <= 1e-10 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Parameter shapes a solver can iterate on: a vector (one column) or a
/// `p x m` matrix thresholded by rows.
pub trait Parameter: Clone + std::fmt::Debug + Send + Sync {
    fn as_flat(&self) -> &[f64];

    fn cols(&self) -> usize;

    fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self>;

    fn rows(&self) -> usize {
        self.as_flat().len() / self.cols().max(1)
    }

    /// l2 distance for vectors, Frobenius for matrices.
    fn distance_to(&self, other: &Self) -> f64 {
        self.as_flat()
            .iter()
            .zip(other.as_flat())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of nonzero rows (entries for vectors).
    fn row_support_size(&self) -> usize {
        let c = self.cols();
        self.as_flat()
            .chunks(c.max(1))
            .filter(|r| r.iter().any(|v| *v != 0.0))
            .count()
    }
}

impl Parameter for DenseVector {
    fn as_flat(&self) -> &[f64] {
        &self.0
    }

    fn cols(&self) -> usize {
        1
    }

    fn from_flat(_rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols != 1 {
            return Err(Error::dims("1 column", cols));
        }
        DenseVector::new(data)
    }
}

impl Parameter for DenseMatrix {
    fn as_flat(&self) -> &[f64] {
        &self.data
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        DenseMatrix::new(rows, cols, data)
    }
}
