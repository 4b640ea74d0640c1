//! Row-sparse coefficient matrix shared by several responses.
use robust_sparse::data::{generate_multi_response, standard_signal};
use robust_sparse::solvers::{block_count, BlockRule};
use robust_sparse::{right_solve, DenseMatrix, DistributionSpec, Model, Parameter, RightConfig, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p, m) = (2000, 60, 3);
    let base = standard_signal(p, 4);
    let truth = DenseMatrix::new(p, m, (0..p * m).map(|i| base[i / m] * (1.0 + (i % m) as f64)).collect())?;
    let mut rng = RngStream::new(5, 0);
    let data = generate_multi_response(n, &truth, &DistributionSpec::gaussian(), &DistributionSpec::student_t(1.8), &mut rng)?;

    let k = block_count(BlockRule::ResponsesPlusLogP { responses: m }, n, p, 1.0);
    let cfg = RightConfig::new(DenseMatrix::zeros(p, m), 4, 0.05, 300, k);
    let out = right_solve(Model::MultiResponse, &data, &cfg, None)?;
    let rows: Vec<usize> = (0..p).filter(|&j| out.estimate.row(j).iter().any(|v| *v != 0.0)).collect();
    println!("K = {k}, selected rows {rows:?}");
    println!("Frobenius error {:.4}", out.estimate.distance_to(&truth));
    Ok(())
}
