//! Median-of-means gradient against the sample mean when a few blocks are corrupted.
use robust_sparse::data::{generate_linear, standard_signal};
use robust_sparse::mom::{mean_gradient, mom_gradient};
use robust_sparse::{BlockPartition, Dataset, DenseMatrix, DenseVector, DistributionSpec, Model, RngStream};

fn main() -> robust_sparse::Result<()> {
    let (n, p, k) = (900, 5, 9);
    let truth = standard_signal(p, 2);
    let mut rng = RngStream::new(1, 0);
    let data = generate_linear(n, &truth, &DistributionSpec::gaussian(), &DistributionSpec::gaussian(), &mut rng)?;
    let part = BlockPartition::contiguous(n, k)?;

    // Wreck the rows of blocks 0..4.
    let mut y = data.y.clone().into_vec();
    for b in 0..(k - 1) / 2 {
        for &i in part.members(b) {
            y[i] = 1e9;
        }
    }
    let dirty = Dataset::new(DenseMatrix::new(n, p, data.x.as_slice().to_vec())?, DenseVector::new(y)?)?;

    // At the truth the population gradient is zero.
    let mom = mom_gradient(Model::Linear, &dirty, &truth, k, &part)?.value;
    let mean = mean_gradient(Model::Linear, &dirty, &truth)?.value;
    println!("MoM  gradient norm {:.4e}", mom.norm_l2());
    println!("mean gradient norm {:.4e}", mean.norm_l2());
    Ok(())
}
