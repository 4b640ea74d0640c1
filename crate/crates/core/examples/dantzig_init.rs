//! Robust Dantzig selector as a warm start for RIGHT.
use robust_sparse::dantzig::{dantzig_init, DantzigConfig};
use robust_sparse::data::{generate_linear, standard_signal};
use robust_sparse::solvers::{block_count, BlockRule};
use robust_sparse::{right_solve, DistributionSpec, Model, RightConfig, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p) = (1500, 40);
    let truth = standard_signal(p, 4);
    let mut rng = RngStream::new(9, 0);
    let data = generate_linear(n, &truth, &DistributionSpec::student_t(3.0), &DistributionSpec::student_t(1.5), &mut rng)?;

    let start = dantzig_init(&data, &DantzigConfig::default())?;
    println!("Dantzig start: error {:.4}, nnz {}", start.distance(&truth)?, start.nnz());
    let cfg = RightConfig::new(start, 8, 0.02, 200, block_count(BlockRule::PLogN, n, p, 1.0));
    let out = right_solve(Model::Linear, &data, &cfg, None)?;
    println!("after RIGHT:   error {:.4}", out.estimate.distance(&truth)?);
    Ok(())
}
