//! MoM gradient error against n for two design tails.
use robust_sparse::experiments::{run_gradient_experiment, ExperimentSpec, Preset};

fn main() -> robust_sparse::Result<()> {
    let spec = ExperimentSpec { trials: 30, tail_dofs: vec![2.4, 22.0], ..ExperimentSpec::gradient(Preset::Desk) };
    let out = run_gradient_experiment(&spec)?;
    for f in &out.fits {
        println!("lambda={:.2}: slope {:+.3} (theory {:+.3}), r2 {:.3}", f.tail_param, f.fit.slope, f.expected_slope, f.fit.r_squared);
    }
    Ok(())
}
