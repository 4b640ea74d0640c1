//! Contraction constants of the robust iteration and the implied error bound.
use robust_sparse::solvers::theorem1_constants;

fn main() -> robust_sparse::Result<()> {
    for (a, b) in [(0.25, 0.5), (1.0, 0.2), (4.0, 0.05)] {
        let c = theorem1_constants(a, b, 1.0)?;
        println!(
            "a={a:<5} b={b:<5} eta={:.4} phi={:.5} c1={:.5} c2={:.4} c0={:.4}",
            c.step_size(),
            c.phi,
            c.c1,
            c.c2,
            c.c0
        );
    }
    let c = theorem1_constants(0.25, 0.5, 1.0)?;
    for t in [0, 10, 50, 200] {
        println!("bound after {t:>3} steps from error 10 with gradient error 0.01: {:.4}", c.error_bound(t, 10.0, 0.01));
    }
    Ok(())
}
