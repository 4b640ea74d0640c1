//! Lasso, adaptive Huber and shrinkage-then-Lasso on one heavy-tailed sample.
use robust_sparse::baselines::{huber_solve, lasso_solve, shrinkage_solve, HuberConfig, LassoConfig, ShrinkageConfig};
use robust_sparse::data::{generate_linear, standard_signal};
use robust_sparse::{DistributionSpec, RngStream};

fn main() -> robust_sparse::Result<()> {
    let truth = standard_signal(100, 5);
    let mut rng = RngStream::new(12, 0);
    let data = generate_linear(1500, &truth, &DistributionSpec::gaussian(), &DistributionSpec::student_t(1.2), &mut rng)?;

    let lasso = lasso_solve(&data, &LassoConfig::default())?;
    println!("lasso     lambda={:.4} error={:.4}", lasso.lambda, lasso.theta.distance(&truth)?);
    let huber = huber_solve(&data, &HuberConfig::default())?;
    println!("huber     tau={:.3} lambda={:.4} error={:.4}", huber.tau, huber.lambda, huber.theta.distance(&truth)?);
    let shrink = shrinkage_solve(&data, &ShrinkageConfig::default())?;
    println!("shrinkage lambda={:.4} error={:.4}", shrink.lambda, shrink.theta.distance(&truth)?);
    Ok(())
}
