//! Tabular data ingestion, robust standardization and held-out evaluation.
//!
//! Standardization uses the raw median absolute deviation, without the
//! 1.4826 factor that would make it consistent for the Gaussian scale.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{huber_solve, lasso_solve, shrinkage_solve, train_validation_split, HuberConfig, LassoConfig, ShrinkageConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experiments::Method;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::models::Model;
use crate::solvers::{block_count, iht_solve, right_solve, BlockRule, RightConfig};
use crate::stats::{mad, mean, median};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io_err(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub medians: Vec<f64>,
    pub mads: Vec<f64>,
    pub response_median: f64,
    /// Names of columns dropped for having zero MAD.
    pub dropped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub response_name: String,
    /// Rows skipped during loading because a cell was missing or non-numeric.
    pub skipped_rows: usize,
    pub standardization: Option<Standardization>,
}

impl TabularDataset {
    pub fn n(&self) -> usize {
        self.data.x.rows()
    }

    pub fn p(&self) -> usize {
        self.data.x.cols()
    }
}

/// Reads a numeric CSV. With a header, `response` names the response
/// column; without one it is a zero-based column index. Rows with any
/// non-numeric cell are skipped and counted.
pub fn load_csv(path: &Path, response: &str, has_header: bool) -> Result<TabularDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => Error::Data(format!("{}: {other:?}", path.display())),
        })?;
    let header: Option<Vec<String>> = if has_header {
        let h = reader.headers().map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut skipped = 0;
    let mut width = header.as_ref().map(Vec::len);
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Data(format!("{}: ragged row with {} fields, expected {w}", path.display(), record.len())));
        }
        let parsed: Option<Vec<f64>> =
            record.iter().map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match parsed {
            Some(r) => rows.push(r),
            None => skipped += 1,
        }
    }
    let width = width.ok_or_else(|| Error::EmptyData(format!("{} has no rows", path.display())))?;
    let names = header.unwrap_or_else(|| (0..width).map(|j| j.to_string()).collect());
    let target = names
        .iter()
        .position(|n| n == response)
        .ok_or_else(|| Error::Data(format!("{}: response column {response:?} not found", path.display())))?;
    if rows.is_empty() {
        return Err(Error::EmptyData(format!("{} has no usable rows", path.display())));
    }
    if width < 2 {
        return Err(Error::Data(format!("{}: need at least one feature column", path.display())));
    }
    let n = rows.len();
    let mut x = Vec::with_capacity(n * (width - 1));
    let mut y = Vec::with_capacity(n);
    for r in &rows {
        for (j, v) in r.iter().enumerate() {
            if j == target {
                y.push(*v);
            } else {
                x.push(*v);
            }
        }
    }
    let feature_names = names.iter().enumerate().filter(|(j, _)| *j != target).map(|(_, s)| s.clone()).collect();
    Ok(TabularDataset {
        data: Dataset::new(DenseMatrix::new(n, width - 1, x)?, DenseVector::new(y)?)?,
        feature_names,
        response_name: names[target].clone(),
        skipped_rows: skipped,
        standardization: None,
    })
}

/// Writes features then the response, with 17 significant digits so a
/// reload reproduces every value exactly.
pub fn write_csv(ds: &TabularDataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = ds.feature_names.clone();
        header.push(ds.response_name.clone());
        w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
        for i in 0..ds.n() {
            let mut row: Vec<String> = ds.data.x.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            row.push(format!("{:.16e}", ds.data.y[i]));
            w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    write_atomic(path, &buf)
}

/// `x_ij <- (x_ij - median_j) / MAD_j`, `y <- y - median(y)`. Zero-MAD
/// columns are dropped and listed in the record.
pub fn robust_standardize(ds: &TabularDataset) -> Result<TabularDataset> {
    let (n, p) = (ds.n(), ds.p());
    let mut keep = Vec::new();
    let mut medians = Vec::new();
    let mut mads = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..p {
        let (med, scale) = mad(ds.data.x.column(j).as_slice());
        if scale > 0.0 {
            keep.push(j);
            medians.push(med);
            mads.push(scale);
        } else {
            dropped.push(ds.feature_names[j].clone());
        }
    }
    if keep.is_empty() {
        return Err(Error::Data("every feature column has zero MAD".into()));
    }
    let mut x = Vec::with_capacity(n * keep.len());
    for i in 0..n {
        let row = ds.data.x.row(i);
        for (k, &j) in keep.iter().enumerate() {
            x.push((row[j] - medians[k]) / mads[k]);
        }
    }
    let y_med = median(ds.data.y.as_slice());
    let y = ds.data.y.iter().map(|v| v - y_med).collect();
    Ok(TabularDataset {
        data: Dataset::new(DenseMatrix::new(n, keep.len(), x)?, DenseVector::new(y)?)?,
        feature_names: keep.iter().map(|&j| ds.feature_names[j].clone()).collect(),
        response_name: ds.response_name.clone(),
        skipped_rows: ds.skipped_rows,
        standardization: Some(Standardization { medians, mads, response_median: y_med, dropped }),
    })
}

/// Undoes [`robust_standardize`] on the retained columns.
pub fn inverse_standardize(ds: &TabularDataset) -> Result<TabularDataset> {
    let rec = ds
        .standardization
        .as_ref()
        .ok_or_else(|| Error::invalid("dataset carries no standardization record"))?;
    let (n, p) = (ds.n(), ds.p());
    let mut x = Vec::with_capacity(n * p);
    for i in 0..n {
        for (j, v) in ds.data.x.row(i).iter().enumerate() {
            x.push(v * rec.mads[j] + rec.medians[j]);
        }
    }
    let y = ds.data.y.iter().map(|v| v + rec.response_median).collect();
    Ok(TabularDataset {
        data: Dataset::new(DenseMatrix::new(n, p, x)?, DenseVector::new(y)?)?,
        standardization: None,
        ..ds.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Number of random splits averaged; 1 reports a single split.
    pub repeats: usize,
    pub sparsity: usize,
    pub step_size: f64,
    pub iht_step_size: f64,
    pub iterations: usize,
    pub block_scale: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.8,
            methods: vec![Method::Right, Method::Iht, Method::Lasso, Method::Huber, Method::Shrinkage],
            seed: 0,
            repeats: 1,
            sparsity: 10,
            step_size: 0.01,
            iht_step_size: 0.001,
            iterations: 300,
            block_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub method: String,
    /// Mean absolute prediction error on held-out rows.
    pub mape: f64,
    pub mse: f64,
    pub splits: usize,
}

/// Prediction errors of `theta` on `data`: `(mean |y - x theta|, mean (y - x theta)^2)`.
pub fn prediction_errors(data: &Dataset, theta: &DenseVector) -> Result<(f64, f64)> {
    if data.x.rows() == 0 {
        return Err(Error::EmptyData("no held-out rows".into()));
    }
    let pred = data.x.matvec(theta)?;
    let resid: Vec<f64> = pred.iter().zip(data.y.iter()).map(|(a, b)| b - a).collect();
    Ok((mean(&resid.iter().map(|r| r.abs()).collect::<Vec<_>>()), mean(&resid.iter().map(|r| r * r).collect::<Vec<_>>())))
}

/// Fits one method on `train` with the settings in `cfg`.
pub fn fit_method(method: Method, train: &Dataset, cfg: &EvalConfig, seed: u64) -> Result<DenseVector> {
    let p = train.x.cols();
    let n = train.x.rows();
    let s = cfg.sparsity.min(p);
    match method {
        Method::Right => {
            let k = block_count(BlockRule::PLogNOverLogP, n, p, cfg.block_scale);
            let rc = RightConfig::new(DenseVector::zeros(p), s, cfg.step_size, cfg.iterations, k);
            Ok(right_solve(Model::Linear, train, &rc, None)?.estimate)
        }
        Method::Iht => {
            let rc = RightConfig::new(DenseVector::zeros(p), s, cfg.iht_step_size, cfg.iterations, 1);
            Ok(iht_solve(Model::Linear, train, &rc, None)?.estimate)
        }
        Method::Lasso => Ok(lasso_solve(train, &LassoConfig { seed, ..Default::default() })?.theta),
        Method::Huber => Ok(huber_solve(train, &HuberConfig { seed, ..Default::default() })?.theta),
        Method::Shrinkage => {
            let sc = ShrinkageConfig { lasso: LassoConfig { seed, ..Default::default() }, ..Default::default() };
            Ok(shrinkage_solve(train, &sc)?.theta)
        }
    }
}

/// Fits each method on random training splits and reports held-out MAPE and
/// MSE, averaged over `cfg.repeats` splits.
pub fn eval_real(ds: &Dataset, cfg: &EvalConfig) -> Result<Vec<EvalMetrics>> {
    if cfg.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let n = ds.x.rows();
    let mut sums = vec![(0.0, 0.0); cfg.methods.len()];
    for r in 0..cfg.repeats {
        let seed = cfg.seed.wrapping_add(r as u64);
        let (train, test) = train_validation_split(n, cfg.train_fraction, seed)?;
        let (train, test) = (ds.subset(&train), ds.subset(&test));
        for (k, &method) in cfg.methods.iter().enumerate() {
            let theta = fit_method(method, &train, cfg, seed)?;
            let (mape, mse) = prediction_errors(&test, &theta)?;
            sums[k].0 += mape;
            sums[k].1 += mse;
        }
    }
    let reps = cfg.repeats as f64;
    Ok(cfg
        .methods
        .iter()
        .zip(sums)
        .map(|(m, (a, b))| EvalMetrics { method: m.name().into(), mape: a / reps, mse: b / reps, splits: cfg.repeats })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[f64; 2]]) -> TabularDataset {
        let x = DenseMatrix::from_rows(&rows.iter().map(|r| vec![r[0]]).collect::<Vec<_>>()).unwrap();
        let y = DenseVector::new(rows.iter().map(|r| r[1]).collect()).unwrap();
        TabularDataset {
            data: Dataset::new(x, y).unwrap(),
            feature_names: vec!["a".into()],
            response_name: "y".into(),
            skipped_rows: 0,
            standardization: None,
        }
    }

    #[test]
    fn standardize_small_column() {
        let ds = table(&[[1.0, 5.0], [2.0, 6.0], [3.0, 9.0]]);
        let st = robust_standardize(&ds).unwrap();
        assert_eq!(st.data.x.as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(st.data.y.as_slice(), &[-1.0, 0.0, 3.0]);
        let back = inverse_standardize(&st).unwrap();
        assert_eq!(back.data, ds.data);
    }

    #[test]
    fn constant_column_is_rejected_when_alone() {
        let ds = table(&[[4.0, 1.0], [4.0, 2.0], [4.0, 3.0]]);
        assert!(robust_standardize(&ds).is_err());
    }

    #[test]
    fn zero_predictor_mape() {
        let ds = table(&[[1.0, 2.0], [2.0, -4.0]]);
        let (mape, mse) = prediction_errors(&ds.data, &DenseVector::zeros(1)).unwrap();
        assert_eq!((mape, mse), (3.0, 10.0));
    }
}
