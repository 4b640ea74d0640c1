//! RIGHT against plain IHT on a heavy-tailed linear problem.
use robust_sparse::data::{generate_linear, standard_signal};
use robust_sparse::solvers::{block_count, BlockRule};
use robust_sparse::{iht_solve, right_solve, DenseVector, DistributionSpec, Model, RightConfig, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p) = (2000, 100);
    let truth = standard_signal(p, 5);
    let mut rng = RngStream::new(42, 0);
    let data = generate_linear(n, &truth, &DistributionSpec::student_t(2.5), &DistributionSpec::student_t(1.5), &mut rng)?;

    let k = block_count(BlockRule::PLogN, n, p, 1.0);
    let cfg = RightConfig::new(DenseVector::zeros(p), 10, 0.02, 250, k);
    let right = right_solve(Model::Linear, &data, &cfg, Some(&truth))?;
    let iht = iht_solve(Model::Linear, &data, &cfg, Some(&truth));

    println!("blocks K = {k}");
    println!("RIGHT error {:.4}", right.estimate.distance(&truth)?);
    match iht {
        Ok(out) => println!("IHT   error {:.4}", out.estimate.distance(&truth)?),
        Err(e) => println!("IHT   {e}"),
    }
    let errs = right.per_iteration_error.unwrap();
    for t in [0, 10, 50, 100, 250] {
        println!("  t={t:<4} ||theta - theta*|| = {:.4}", errs[t]);
    }
    Ok(())
}
