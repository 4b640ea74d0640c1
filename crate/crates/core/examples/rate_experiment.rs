//! A small error-rate sweep. The CLI's `rate-exp` runs the full preset.
use robust_sparse::experiments::{run_rate_experiment, ExperimentSpec, Preset};

fn main() -> robust_sparse::Result<()> {
    let spec = ExperimentSpec {
        p: 100,
        n_grid: vec![300, 600, 1200, 2400],
        trials: 10,
        tail_dofs: vec![1.4, 6.0],
        ..ExperimentSpec::rate(Preset::Desk)
    };
    let out = run_rate_experiment(&spec)?;
    for c in &out.curves {
        println!("delta={:.2} n={:<5} mean error {:.4}", c.tail_param, c.n, c.mean_error);
    }
    for f in &out.fits {
        println!("delta={:.2}: slope {:+.3} (theory {:+.3}), r2 {:.3}", f.tail_param, f.fit.slope, f.expected_slope, f.fit.r_squared);
    }
    Ok(())
}
