//! Tails of the built-in laws: sample kurtosis and extreme draws.
use robust_sparse::samplers::sample_design;
use robust_sparse::{DistributionSpec, RngStream};

fn main() -> robust_sparse::Result<()> {
    let laws = [
        ("gaussian", DistributionSpec::gaussian()),
        ("t(6)", DistributionSpec::student_t(6.0)),
        ("t(2.5)", DistributionSpec::student_t(2.5)),
        ("mvt(2.5)", DistributionSpec::multivariate_t(2.5)),
        ("t(1.2)", DistributionSpec::student_t(1.2)),
    ];
    for (name, law) in laws {
        let mut rng = RngStream::new(1, 0);
        let x = sample_design(20_000, 5, &law, &mut rng)?;
        let v = x.as_slice();
        let m2 = v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64;
        let m4 = v.iter().map(|a| a.powi(4)).sum::<f64>() / v.len() as f64;
        let max = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        println!("{name:<9} var {m2:>10.3}  kurtosis {:>12.1}  max |x| {max:>10.1}", m4 / (m2 * m2));
    }
    Ok(())
}
