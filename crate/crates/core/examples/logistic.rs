//! Sparse logistic regression with MoM gradients.
use robust_sparse::data::generate_logistic;
use robust_sparse::solvers::{block_count, BlockRule};
use robust_sparse::{right_solve, DenseVector, DistributionSpec, Model, RightConfig, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p) = (3000, 50);
    let mut theta = vec![0.0; p];
    theta[..4].copy_from_slice(&[2.0, -2.0, 1.5, -1.5]);
    let truth = DenseVector::new(theta)?;
    let mut rng = RngStream::new(3, 0);
    let data = generate_logistic(n, &truth, &DistributionSpec::student_t(3.0), &mut rng)?;

    let cfg = RightConfig::new(DenseVector::zeros(p), 4, 0.5, 400, block_count(BlockRule::PLogN, n, p, 1.0));
    let out = right_solve(Model::Logistic, &data, &cfg, None)?;
    println!("estimate on the true support: {:?}", &out.estimate.as_slice()[..4]);
    println!("error {:.4}", out.estimate.distance(&truth)?);
    Ok(())
}
