//! Held-out evaluation on a CSV file, here a synthetic one written to a temp dir.
use robust_sparse::data::{generate_linear, standard_signal};
use robust_sparse::experiments::Method;
use robust_sparse::io::{eval_real, load_csv, robust_standardize, write_csv, EvalConfig, TabularDataset};
use robust_sparse::{DistributionSpec, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p) = (120, 300);
    let mut rng = RngStream::new(71, 0);
    let data = generate_linear(n, &standard_signal(p, 5), &DistributionSpec::gaussian(), &DistributionSpec::student_t(1.5), &mut rng)?;
    let table = TabularDataset {
        data,
        feature_names: (0..p).map(|j| format!("gene{j}")).collect(),
        response_name: "rate".into(),
        skipped_rows: 0,
        standardization: None,
    };
    let path = std::env::temp_dir().join("robust_sparse_eval_example.csv");
    write_csv(&table, &path)?;

    let ds = robust_standardize(&load_csv(&path, "rate", true)?)?;
    let cfg = EvalConfig { methods: vec![Method::Right, Method::Iht, Method::Lasso], repeats: 5, ..Default::default() };
    for m in eval_real(&ds.data, &cfg)? {
        println!("{:<6} MAPE {:.4}  MSE {:.4}  ({} splits)", m.method, m.mape, m.mse, m.splits);
    }
    let _ = std::fs::remove_file(path);
    Ok(())
}
