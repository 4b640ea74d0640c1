//! Gradient oracles: the element-wise median-of-means estimator and the
//! plain empirical mean behind a common trait.
//!
//! Observations are split into `K` blocks whose sizes differ by at most one.
//! Each block contributes the mean of its per-sample gradients, and the MoM
//! estimate takes the median of those block means entry by entry. The
//! partition is fixed for the lifetime of an oracle.

use serde::{Deserialize, Serialize};

use crate::data::Observations;
use crate::error::{Error, Result};
use crate::linalg::{nonzero_indices, Parameter};
use crate::models::{accumulate_outer, Model};
use crate::samplers::RngStream;
use crate::stats::median_in_place;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Mom,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    /// Observation `i` goes to block `i mod K`.
    Contiguous,
    /// Observations are permuted with the trial stream before round-robin assignment.
    SeededShuffle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    assignments: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn contiguous(n: usize, k: usize) -> Result<Self> {
        Self::from_order((0..n).collect(), k)
    }

    pub fn shuffled(n: usize, k: usize, rng: &mut RngStream) -> Result<Self> {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        Self::from_order(order, k)
    }

    fn from_order(order: Vec<usize>, k: usize) -> Result<Self> {
        let n = order.len();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("block count {k} must lie in [1, {n}]")));
        }
        let mut assignments = vec![0; n];
        let mut members = vec![Vec::with_capacity(n / k + 1); k];
        for (pos, &i) in order.iter().enumerate() {
            assignments[i] = pos % k;
        }
        // Members are kept in ascending observation order so that K = 1
        // sums in exactly the same order as the full-sample mean.
        for (i, &b) in assignments.iter().enumerate() {
            members[b].push(i);
        }
        Ok(BlockPartition { assignments, members })
    }

    pub fn blocks(&self) -> usize {
        self.members.len()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }
}

pub fn partition(n: usize, k: usize, mode: PartitionMode, rng: Option<&mut RngStream>) -> Result<BlockPartition> {
    match (mode, rng) {
        (PartitionMode::Contiguous, _) => BlockPartition::contiguous(n, k),
        (PartitionMode::SeededShuffle, Some(rng)) => BlockPartition::shuffled(n, k, rng),
        (PartitionMode::SeededShuffle, None) => {
            Err(Error::invalid("seeded-shuffle partition needs a random stream"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate<P> {
    pub value: P,
    pub blocks_used: usize,
    pub kind: OracleKind,
}

/// Reusable buffers for repeated oracle calls on one problem.
#[derive(Debug, Default)]
pub struct Workspace {
    rows: Vec<usize>,
    residual: Vec<f64>,
    block_means: Vec<f64>,
    column: Vec<f64>,
}

/// Anything that maps a parameter to a gradient estimate.
pub trait GradientOracle: Sync {
    fn kind(&self) -> OracleKind;

    fn blocks(&self) -> usize;

    /// Writes the estimate at the flat `p x m` parameter `theta` into `out`.
    fn estimate_into(
        &self,
        model: Model,
        data: &dyn Observations,
        theta: &[f64],
        out: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<()>;

    fn estimate<P: Parameter>(&self, model: Model, data: &dyn Observations, theta: &P) -> Result<GradientEstimate<P>>
    where
        Self: Sized,
    {
        let flat = theta.as_flat();
        let mut out = vec![0.0; flat.len()];
        self.estimate_into(model, data, flat, &mut out, &mut Workspace::default())?;
        Ok(GradientEstimate {
            value: P::from_flat(theta.rows(), theta.cols(), out)?,
            blocks_used: self.blocks(),
            kind: self.kind(),
        })
    }
}

fn check_problem(model: Model, data: &dyn Observations, theta: &[f64]) -> Result<usize> {
    if data.n() == 0 {
        return Err(Error::EmptyData("no observations".into()));
    }
    let m = data.responses();
    if theta.len() != data.p() * m {
        return Err(Error::dims(format!("{}x{m} parameter", data.p()), theta.len()));
    }
    if model != Model::MultiResponse && m != 1 {
        return Err(Error::dims("1 response column", m));
    }
    Ok(m)
}

/// Sum of per-sample gradients over `members`, divided by their count.
fn block_mean_into(
    model: Model,
    data: &dyn Observations,
    theta: &[f64],
    rows: &[usize],
    members: &[usize],
    residual: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if members.is_empty() {
        return Err(Error::EmptyData("empty block".into()));
    }
    out.fill(0.0);
    let x = data.x();
    for &i in members {
        let xi = x.row(i);
        model.residual(xi, data.y_row(i), theta, rows, residual);
        accumulate_outer(xi, residual, out);
    }
    let count = members.len() as f64;
    out.iter_mut().for_each(|g| *g /= count);
    Ok(())
}

fn live_rows(theta: &[f64], m: usize, rows: &mut Vec<usize>) {
    rows.clear();
    if m == 1 {
        rows.extend(nonzero_indices(theta));
    } else {
        rows.extend(
            theta
                .chunks(m)
                .enumerate()
                .filter(|(_, r)| r.iter().any(|v| *v != 0.0))
                .map(|(j, _)| j),
        );
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MeanOracle;

impl GradientOracle for MeanOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::Mean
    }

    fn blocks(&self) -> usize {
        1
    }

    fn estimate_into(
        &self,
        model: Model,
        data: &dyn Observations,
        theta: &[f64],
        out: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let m = check_problem(model, data, theta)?;
        live_rows(theta, m, &mut ws.rows);
        ws.residual.resize(m, 0.0);
        let all: Vec<usize> = (0..data.n()).collect();
        block_mean_into(model, data, theta, &ws.rows, &all, &mut ws.residual, out)
    }
}

#[derive(Clone, Debug)]
pub struct MomOracle {
    partition: BlockPartition,
}

impl MomOracle {
    pub fn new(partition: BlockPartition) -> Self {
        MomOracle { partition }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }
}

impl GradientOracle for MomOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::Mom
    }

    fn blocks(&self) -> usize {
        self.partition.blocks()
    }

    fn estimate_into(
        &self,
        model: Model,
        data: &dyn Observations,
        theta: &[f64],
        out: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let m = check_problem(model, data, theta)?;
        if self.partition.len() != data.n() {
            return Err(Error::dims(
                format!("partition over {} observations", data.n()),
                self.partition.len(),
            ));
        }
        let k = self.partition.blocks();
        let width = theta.len();
        live_rows(theta, m, &mut ws.rows);
        ws.residual.resize(m, 0.0);
        ws.block_means.resize(k * width, 0.0);
        for b in 0..k {
            block_mean_into(
                model,
                data,
                theta,
                &ws.rows,
                self.partition.members(b),
                &mut ws.residual,
                &mut ws.block_means[b * width..(b + 1) * width],
            )?;
        }
        if k == 1 {
            out.copy_from_slice(&ws.block_means[..width]);
            return Ok(());
        }
        ws.column.resize(k, 0.0);
        for (j, o) in out.iter_mut().enumerate() {
            for b in 0..k {
                ws.column[b] = ws.block_means[b * width + j];
            }
            *o = median_in_place(&mut ws.column);
        }
        Ok(())
    }
}

/// Mean gradient of block `k` under `partition`.
pub fn block_mean_gradient<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    theta: &P,
    partition: &BlockPartition,
    k: usize,
) -> Result<P> {
    let flat = theta.as_flat();
    let m = check_problem(model, data, flat)?;
    if k >= partition.blocks() {
        return Err(Error::IndexOutOfRange { index: k, dim: partition.blocks() });
    }
    let mut rows = Vec::new();
    live_rows(flat, m, &mut rows);
    let mut out = vec![0.0; flat.len()];
    block_mean_into(model, data, flat, &rows, partition.members(k), &mut vec![0.0; m], &mut out)?;
    P::from_flat(theta.rows(), theta.cols(), out)
}

pub fn mom_gradient<P: Parameter>(
    model: Model,
    data: &dyn Observations,
    theta: &P,
    k: usize,
    partition: &BlockPartition,
) -> Result<GradientEstimate<P>> {
    if k != partition.blocks() {
        return Err(Error::invalid(format!(
            "block count {k} disagrees with partition of {} blocks",
            partition.blocks()
        )));
    }
    MomOracle::new(partition.clone()).estimate(model, data, theta)
}

pub fn mean_gradient<P: Parameter>(model: Model, data: &dyn Observations, theta: &P) -> Result<GradientEstimate<P>> {
    MeanOracle.estimate(model, data, theta)
}

/// Element-wise median of block means of raw values (no model); the plain
/// median-of-means mean estimator.
pub fn median_of_means(values: &[f64], partition: &BlockPartition) -> Result<f64> {
    if values.len() != partition.len() {
        return Err(Error::dims(partition.len(), values.len()));
    }
    let mut means: Vec<f64> = (0..partition.blocks())
        .map(|b| {
            let mem = partition.members(b);
            mem.iter().map(|&i| values[i]).sum::<f64>() / mem.len() as f64
        })
        .collect();
    Ok(median_in_place(&mut means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::linalg::{DenseMatrix, DenseVector};

    fn toy() -> Dataset {
        let x = DenseMatrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 1.0],
            vec![-1.0, 3.0],
            vec![2.0, -1.0],
        ])
        .unwrap();
        Dataset::new(x, DenseVector::new(vec![1.0, 2.0, 0.5, -1.0, 3.0]).unwrap()).unwrap()
    }

    #[test]
    fn partition_sizes() {
        assert_eq!(BlockPartition::contiguous(6, 3).unwrap().block_sizes(), vec![2, 2, 2]);
        assert_eq!(BlockPartition::contiguous(7, 3).unwrap().block_sizes(), vec![3, 2, 2]);
        let p = BlockPartition::contiguous(5, 5).unwrap();
        assert!(p.block_sizes().iter().all(|s| *s == 1));
        assert!(BlockPartition::contiguous(3, 4).is_err());
        assert!(BlockPartition::contiguous(3, 0).is_err());
        let mut rng = RngStream::new(0, 0);
        let s = BlockPartition::shuffled(11, 4, &mut rng).unwrap();
        let sizes = s.block_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 11);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(partition(5, 2, PartitionMode::SeededShuffle, None).is_err());
    }

    #[test]
    fn k1_mom_equals_mean_exactly() {
        let d = toy();
        let theta = DenseVector::new(vec![0.3, -0.7]).unwrap();
        let part = BlockPartition::contiguous(5, 1).unwrap();
        let mom = mom_gradient(Model::Linear, &d, &theta, 1, &part).unwrap();
        let mean = mean_gradient(Model::Linear, &d, &theta).unwrap();
        assert_eq!(mom.value, mean.value);
        assert_eq!(mean.kind, OracleKind::Mean);
        let b0 = block_mean_gradient(Model::Linear, &d, &theta, &part, 0).unwrap();
        assert_eq!(b0, mean.value);
    }

    #[test]
    fn single_sample_and_duplicated_data() {
        let d = toy();
        let theta = DenseVector::new(vec![0.3, -0.7]).unwrap();
        let one = d.subset(&[2]);
        let g = mean_gradient(Model::Linear, &one, &theta).unwrap().value;
        let direct = crate::models::linear_gradient(&DenseVector::new(one.x.row(0).to_vec()).unwrap(), one.y[0], &theta).unwrap();
        assert_eq!(g, direct);
        let dup = d.subset(&[0, 1, 2, 3, 4, 0, 1, 2, 3, 4]);
        let a = mean_gradient(Model::Linear, &d, &theta).unwrap().value;
        let b = mean_gradient(Model::Linear, &dup, &theta).unwrap().value;
        for (u, v) in a.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_median_of_block_means() {
        // Three singleton blocks with linear gradients at theta = 0: -y x.
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let d = Dataset::new(x, DenseVector::new(vec![-1.0, -2.0, -10.0]).unwrap()).unwrap();
        let part = BlockPartition::contiguous(3, 3).unwrap();
        let g = mom_gradient(Model::Linear, &d, &DenseVector::zeros(1), 3, &part).unwrap();
        assert_eq!(g.value.as_slice(), &[2.0]);
        assert!(mom_gradient(Model::Linear, &d, &DenseVector::zeros(1), 2, &part).is_err());
    }

    #[test]
    fn empty_data_is_an_error() {
        let d = Dataset::new(DenseMatrix::zeros(0, 2), DenseVector::zeros(0)).unwrap();
        assert!(mean_gradient(Model::Linear, &d, &DenseVector::zeros(2)).is_err());
    }
}
