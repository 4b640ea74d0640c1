mod common;

use proptest::prelude::*;
use robust_sparse::data::{generate_linear, generate_logistic, generate_multi_response, standard_signal};
use robust_sparse::linalg::symmetric_eigenvalues;
use robust_sparse::solvers::{
    block_count, fit_stability_envelope, linear_population_gradient, probe_srcg, probe_srs, solve_with_oracle,
    theorem1_constants, BlockRule,
};
use robust_sparse::{
    iht_solve, right_solve, BlockPartition, Dataset, DenseMatrix, DenseVector, DistributionSpec, Error, MomOracle,
    Model, OracleKind, RightConfig, RngStream,
};

fn noiseless(n: usize, p: usize, s: usize, seed: u64) -> (Dataset, DenseVector) {
    let theta = standard_signal(p, s);
    let mut rng = RngStream::new(seed, 0);
    let x = common::gaussian_matrix(n, p, &mut rng);
    let y = x.matvec(&theta).unwrap();
    (Dataset::new(x, y).unwrap(), theta)
}

fn top_eigenvalue(x: &DenseMatrix) -> f64 {
    *symmetric_eigenvalues(&common::sample_covariance(x)).unwrap().last().unwrap()
}

#[test]
fn noiseless_instance_is_recovered_geometrically() {
    let (data, truth) = noiseless(200, 50, 3, 11);
    let k = block_count(BlockRule::PLogN, 200, 50, 1.0);
    let eta = 0.5 / top_eigenvalue(&data.x);
    let cfg = RightConfig::new(DenseVector::zeros(50), 3, eta, 300, k);
    let out = right_solve(Model::Linear, &data, &cfg, Some(&truth)).unwrap();
    let errs = out.per_iteration_error.unwrap();
    assert_eq!(errs.len(), 301);
    assert!(*errs.last().unwrap() < 1e-6, "final error {}", errs.last().unwrap());
    let stop = errs.iter().position(|e| *e < 1e-8).unwrap();
    for (t, w) in errs[..=stop].windows(2).enumerate() {
        assert!(w[1] <= 0.99 * w[0], "iteration {t}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn zero_iterations_return_the_initial_point() {
    let (data, truth) = noiseless(40, 10, 2, 2);
    let init = DenseVector::new((0..10).map(|j| j as f64).collect()).unwrap();
    let cfg = RightConfig::new(init.clone(), 3, 0.1, 0, 2);
    let out = right_solve(Model::Linear, &data, &cfg, Some(&truth)).unwrap();
    assert_eq!(out.estimate, init);
    assert_eq!(out.per_iteration_error.unwrap().len(), 1);
}

#[test]
fn mean_oracle_reproduces_plain_iht() {
    let theta = standard_signal(30, 4);
    let mut rng = RngStream::new(8, 0);
    let data =
        generate_linear(150, &theta, &DistributionSpec::gaussian(), &DistributionSpec::student_t(3.0), &mut rng).unwrap();
    let cfg = RightConfig::new(DenseVector::zeros(30), 4, 0.05, 40, 5).recording();
    let iht = iht_solve(Model::Linear, &data, &cfg, None).unwrap();
    // Hand-rolled IHT as the oracle.
    let mut th = vec![0.0; 30];
    for t in 0..40 {
        let mut g = vec![0.0; 30];
        for i in 0..150 {
            let gi = Model::Linear.sample_gradient(data.x.row(i), &[data.y[i]], &th).unwrap();
            for j in 0..30 {
                g[j] += gi[j];
            }
        }
        for j in 0..30 {
            th[j] -= 0.05 * g[j] / 150.0;
        }
        let v = robust_sparse::hard_threshold(&DenseVector::new(th.clone()).unwrap(), 4);
        th = v.into_vec();
        let ours = &iht.trajectory.as_ref().unwrap()[t];
        for j in 0..30 {
            assert!((ours[j] - th[j]).abs() < 1e-10 * (1.0 + th[j].abs()), "iter {t}");
        }
    }
    let mean_cfg = cfg.clone().with_oracle(OracleKind::Mean);
    let via_right = right_solve(Model::Linear, &data, &mean_cfg, None).unwrap();
    assert_eq!(via_right.estimate, iht.estimate);
}

#[test]
fn single_column_multi_path_is_bit_identical() {
    let theta = standard_signal(40, 5);
    let mut rng = RngStream::new(21, 0);
    let data = generate_linear(300, &theta, &DistributionSpec::student_t(2.5), &DistributionSpec::student_t(1.5), &mut rng)
        .unwrap();
    let multi = data.to_multi();
    let cfg_v = RightConfig::new(DenseVector::zeros(40), 8, 0.02, 100, 6);
    let cfg_m = RightConfig::new(DenseMatrix::zeros(40, 1), 8, 0.02, 100, 6);
    let v = right_solve(Model::Linear, &data, &cfg_v, None).unwrap().estimate;
    let m = right_solve(Model::MultiResponse, &multi, &cfg_m, None).unwrap().estimate;
    assert_eq!(v.as_slice(), m.as_slice());
}

#[test]
fn multi_response_recovers_row_sparse_signal() {
    let mut theta = DenseMatrix::zeros(30, 3).into_vec();
    for (j, v) in [(0, 3.0), (4, -2.0), (9, 4.0)] {
        for l in 0..3 {
            theta[j * 3 + l] = v * (l as f64 + 1.0);
        }
    }
    let theta = DenseMatrix::new(30, 3, theta).unwrap();
    let mut rng = RngStream::new(4, 0);
    let data = generate_multi_response(
        800,
        &theta,
        &DistributionSpec::gaussian(),
        &DistributionSpec::multivariate_t(2.5),
        &mut rng,
    )
    .unwrap();
    let k = block_count(BlockRule::ResponsesPlusLogP { responses: 3 }, 800, 30, 1.0);
    let cfg = RightConfig::new(DenseMatrix::zeros(30, 3), 3, 0.1, 200, k);
    let est = right_solve(Model::MultiResponse, &data, &cfg, None).unwrap().estimate;
    assert_eq!(est.nonzero_rows(), 3);
    for j in [0, 4, 9] {
        assert!(est.row(j).iter().any(|v| *v != 0.0));
    }
    assert!(est.sub(&theta).unwrap().norm_frobenius() < 0.5);
}

#[test]
fn logistic_right_finds_the_support() {
    let mut theta = vec![0.0; 20];
    theta[2] = 2.0;
    theta[7] = -2.0;
    let theta = DenseVector::new(theta).unwrap();
    let mut rng = RngStream::new(17, 0);
    let data = generate_logistic(2000, &theta, &DistributionSpec::gaussian(), &mut rng).unwrap();
    let cfg = RightConfig::new(DenseVector::zeros(20), 2, 1.0, 300, 5);
    let est = right_solve(Model::Logistic, &data, &cfg, Some(&theta)).unwrap();
    assert!(est.estimate[2] > 1.0 && est.estimate[7] < -1.0);
    assert!(*est.per_iteration_error.unwrap().last().unwrap() < 0.6);
}

#[test]
fn runaway_steps_raise_divergence() {
    let theta = standard_signal(20, 3);
    let mut rng = RngStream::new(1, 0);
    let data =
        generate_linear(100, &theta, &DistributionSpec::student_t(1.5), &DistributionSpec::gaussian(), &mut rng).unwrap();
    let cfg = RightConfig::new(DenseVector::zeros(20), 3, 50.0, 500, 3);
    match iht_solve(Model::Linear, &data, &cfg, None) {
        Err(Error::Diverged { iteration }) => assert!((1..=500).contains(&iteration)),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn iht_loses_to_right_under_heavy_tails() {
    let truth = standard_signal(100, 5);
    let trials = 50;
    let mut right_better = 0;
    for trial in 0..trials {
        let mut rng = RngStream::new(606, trial);
        let data = generate_linear(
            2000,
            &truth,
            &DistributionSpec::student_t(2.5),
            &DistributionSpec::student_t(1.5),
            &mut rng,
        )
        .unwrap();
        let k = block_count(BlockRule::PLogN, 2000, 100, 1.0);
        let right = RightConfig::new(DenseVector::zeros(100), 10, 0.01, 300, k);
        let iht = RightConfig { step_size: 0.001, ..right.clone() };
        let e_right = right_solve(Model::Linear, &data, &right, Some(&truth)).unwrap();
        let e_iht = match iht_solve(Model::Linear, &data, &iht, Some(&truth)) {
            Ok(r) => *r.per_iteration_error.unwrap().last().unwrap(),
            Err(Error::Diverged { .. }) => f64::INFINITY,
            Err(e) => panic!("{e}"),
        };
        if e_iht > *e_right.per_iteration_error.unwrap().last().unwrap() {
            right_better += 1;
        }
    }
    assert!(right_better * 10 >= trials * 8, "RIGHT ahead in {right_better} of {trials}");
}

#[test]
fn zero_design_stays_at_the_projected_start() {
    let x = DenseMatrix::zeros(30, 6);
    let data = Dataset::new(x, common::gaussian_vector(30, &mut RngStream::new(1, 1))).unwrap();
    let init = DenseVector::new(vec![5.0, -1.0, 0.5, 3.0, 0.0, -4.0]).unwrap();
    let cfg = RightConfig::new(init.clone(), 2, 0.3, 7, 3).recording();
    let out = iht_solve(Model::Linear, &data, &cfg, None).unwrap();
    let projected = robust_sparse::hard_threshold(&init, 2);
    for it in out.trajectory.unwrap() {
        assert_eq!(it, projected);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let (data, _) = noiseless(20, 5, 1, 0);
    let base = RightConfig::new(DenseVector::zeros(5), 1, 0.1, 5, 2);
    assert!(right_solve(Model::Linear, &data, &RightConfig { sparsity: 0, ..base.clone() }, None).is_err());
    assert!(right_solve(Model::Linear, &data, &RightConfig { step_size: -1.0, ..base.clone() }, None).is_err());
    assert!(right_solve(Model::Linear, &data, &RightConfig { blocks: 0, ..base.clone() }, None).is_err());
    assert!(right_solve(Model::Linear, &data, &RightConfig { blocks: 21, ..base.clone() }, None).is_err());
    let wrong = RightConfig::new(DenseVector::zeros(4), 1, 0.1, 5, 2);
    assert!(right_solve(Model::Linear, &data, &wrong, None).is_err());
}

#[test]
fn custom_oracle_entry_point_matches_right_solve() {
    let (data, truth) = noiseless(90, 12, 2, 5);
    let cfg = RightConfig::new(DenseVector::zeros(12), 2, 0.2, 30, 3);
    let oracle = MomOracle::new(BlockPartition::contiguous(90, 3).unwrap());
    let a = solve_with_oracle(Model::Linear, &data, &oracle, &cfg, Some(&truth)).unwrap();
    let b = right_solve(Model::Linear, &data, &cfg, Some(&truth)).unwrap();
    assert_eq!(a.estimate, b.estimate);
}

#[test]
#[allow(clippy::approx_constant)]
fn constants_match_hand_evaluation() {
    // phi = sqrt(1 - 4 * 0.25 * 0.5) = 1/sqrt(2) and phi^2 = 1/2.
    let phi = std::f64::consts::FRAC_1_SQRT_2;
    let c1 = (3.0 + phi) / 4.0;
    let c2 = (1.0 + phi) / (phi - 0.5);
    let d = -1.5 + 2.0 * phi + 1.0;
    let c0 = 1.0 + 16.0 / (d * d);
    let c = theorem1_constants(0.25, 0.5, 1.0).unwrap();
    assert!((c.phi - 0.70711).abs() < 1e-4 && (c.c1 - 0.92678).abs() < 1e-4);
    for (got, want) in [(c.phi, phi), (c.c1, c1), (c.c2, c2), (c.c0, c0)] {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    assert!((c.step_size() - 0.5).abs() < 1e-15);
    assert!(c.admits_multiplier(0.1) && !c.admits_multiplier(0.2));
}

#[test]
fn constants_reject_invalid_inputs() {
    assert!(theorem1_constants(0.0, 0.5, 1.0).is_err());
    assert!(theorem1_constants(0.25, 2.0, 1.0).is_err());
    assert!(theorem1_constants(0.25, 1.0, 1.0).is_err());
    assert!(theorem1_constants(0.25, 0.5, 1.5).is_err());
}

#[test]
fn srcg_probe_matches_nalgebra_spectra() {
    let mut rng = RngStream::new(2, 0);
    let x = common::gaussian_matrix(40, 7, &mut rng);
    let sigma = common::sample_covariance(&x);
    let probe = probe_srcg(&sigma, 1, 1, 1000, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!(probe.supports_examined, 35);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    common::for_each_subset(7, 4, &mut |idx| {
        let sub = sigma.principal_submatrix(idx);
        let e = nalgebra::DMatrix::from_row_slice(4, 4, sub.as_slice()).symmetric_eigen().eigenvalues;
        lo = lo.min(e.min());
        hi = hi.max(e.max());
    });
    assert!((probe.kappa_minus - lo).abs() < 1e-10 && (probe.kappa_plus - hi).abs() < 1e-10);
    assert!((probe.a_hat - lo / (2.0 * hi * hi)).abs() < 1e-12 && (probe.b_hat - lo / 2.0).abs() < 1e-12);
    // Identity covariance gives a = b = 1/2.
    let id = probe_srcg(&DenseMatrix::identity(30), 2, 2, 50, &mut RngStream::new(0, 1)).unwrap();
    assert_eq!(id.supports_examined, 50);
    assert!((id.a_hat - 0.5).abs() < 1e-12 && (id.b_hat - 0.5).abs() < 1e-12);
}

#[test]
fn srcg_probe_small_cases() {
    let d = DenseMatrix::diagonal(&[1.0, 4.0]).unwrap();
    let probe = probe_srcg(&d, 1, 0, 10, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!((probe.kappa_minus, probe.kappa_plus), (1.0, 4.0));
    assert!((probe.a_hat - 1.0 / 32.0).abs() < 1e-15);
    let mut rng = RngStream::new(8, 8);
    let sigma = common::sample_covariance(&common::gaussian_matrix(30, 8, &mut rng));
    let probe = probe_srcg(&sigma, 1, 1, 1000, &mut rng).unwrap();
    assert_eq!(probe.supports_examined, 70);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    common::for_each_subset(8, 4, &mut |idx| {
        let sub = sigma.principal_submatrix(idx);
        let e = nalgebra::DMatrix::from_row_slice(4, 4, sub.as_slice()).symmetric_eigen().eigenvalues;
        lo = lo.min(e.min());
        hi = hi.max(e.max());
    });
    assert!((probe.kappa_minus - lo).abs() < 1e-8 && (probe.kappa_plus - hi).abs() < 1e-8);
    assert!((probe.kappa_minus / probe.kappa_plus).powi(2) <= 1.0);
    let skew = DenseMatrix::new(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
    assert!(probe_srcg(&skew, 1, 0, 1, &mut rng).is_err());
}

#[test]
fn srs_coefficients_shrink_with_n_for_single_block() {
    let truth = standard_signal(20, 3);
    let sigma = DenseMatrix::identity(20);
    let pop = linear_population_gradient(&sigma, &truth);
    let probes: Vec<DenseVector> = (0..4)
        .map(|i| {
            let mut v = truth.clone().into_vec();
            v[1] += 0.5 * i as f64;
            v[7] = 0.3 * i as f64;
            DenseVector::new(v).unwrap()
        })
        .collect();
    let mut curve = Vec::new();
    for n in [500, 2000, 8000] {
        let (mut phi, mut gamma) = (0.0, 0.0);
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, n as u64);
            let g = DistributionSpec::gaussian();
            let data = generate_linear(n, &truth, &g, &g, &mut rng).unwrap();
            let est = probe_srs(Model::Linear, &data, &probes, 1, 4, 3, &truth, &pop).unwrap();
            phi += est.phi_mult / 20.0;
            gamma += est.gamma_add / 20.0;
        }
        curve.push((phi, gamma));
    }
    for w in curve.windows(2) {
        assert!(w[1].0 <= w[0].0 && w[1].1 < w[0].1, "{curve:?}");
    }
}

#[test]
fn srs_degenerate_probes() {
    let truth = standard_signal(10, 2);
    let sigma = DenseMatrix::identity(10);
    let pop = linear_population_gradient(&sigma, &truth);
    let x = common::gaussian_matrix(50, 10, &mut RngStream::new(2, 2));
    let y = x.matvec(&truth).unwrap();
    let data = Dataset::new(x, y).unwrap();
    let at_truth = probe_srs(Model::Linear, &data, &[truth.clone(), truth.clone()], 5, 2, 2, &truth, &pop).unwrap();
    assert_eq!(at_truth.gamma_add, 0.0);
    assert!(probe_srs(Model::Linear, &data, &[], 5, 2, 2, &truth, &pop).is_err());
    let mut off = truth.clone().into_vec();
    off[5] = 1.0;
    let off = DenseVector::new(off).unwrap();
    let single = probe_srs(Model::Linear, &data, std::slice::from_ref(&off), 5, 3, 2, &truth, &pop).unwrap();
    assert_eq!(single.phi_mult, 0.0);
    assert!(single.gamma_add > 0.0);
}

#[test]
fn srs_probe_shrinks_with_sample_size() {
    let truth = standard_signal(50, 3);
    let sigma = DenseMatrix::identity(50);
    let pop = linear_population_gradient(&sigma, &truth);
    let mut gammas = Vec::new();
    for n in [400, 6400] {
        let mut rng = RngStream::new(9, n as u64);
        let data = generate_linear(n, &truth, &DistributionSpec::gaussian(), &DistributionSpec::student_t(3.0), &mut rng)
            .unwrap();
        let probes: Vec<DenseVector> = (0..5)
            .map(|i| {
                let mut v = truth.clone().into_vec();
                v[0] += i as f64;
                DenseVector::new(v).unwrap()
            })
            .collect();
        let est = probe_srs(Model::Linear, &data, &probes, 5, 5, 3, &truth, &pop).unwrap();
        assert_eq!(est.probe_count, 5);
        gammas.push(est.gamma_add + est.phi_mult);
    }
    assert!(gammas[1] < gammas[0]);
}

#[test]
fn envelope_dominates_every_point() {
    let pts = [(0.0, 1.0), (1.0, 1.5), (2.0, 3.0), (4.0, 2.0)];
    let (phi, gamma) = fit_stability_envelope(&pts).unwrap();
    for (d, e) in pts {
        assert!(e <= phi * d + gamma + 1e-12);
    }
    assert!(fit_stability_envelope(&[]).is_err());
}

#[test]
fn block_rules() {
    let k = block_count(BlockRule::PLogN, 1000, 200, 1.0);
    assert_eq!(k, (200.0 * 1000f64.ln()).ln().round() as usize);
    assert_eq!(block_count(BlockRule::Fixed { blocks: 50 }, 10, 5, 1.0), 10);
    assert_eq!(block_count(BlockRule::PLogN, 10, 5, 0.01), 1);
    assert_eq!(block_count(BlockRule::ResponsesPlusLogP { responses: 4 }, 500, 100, 1.0), (4.0 + 100f64.ln()).round() as usize);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn contraction_factor_below_one(a in 1e-3f64..10.0, frac in 1e-3f64..0.999, eta0 in 1e-3f64..1.0) {
        let b = frac / (4.0 * a);
        let c = theorem1_constants(a, b, eta0).unwrap();
        prop_assert!(c.c1 < 1.0 && c.c1 > 0.75);
        prop_assert!(c.c0 >= 1.0 && c.c2 > 0.0);
        prop_assert!((c.phi * c.phi - (1.0 - 4.0 * a * b * eta0)).abs() < 1e-12);
    }

    #[test]
    fn iterates_stay_sparse(seed in 0u64..50, s in 1usize..6) {
        let (data, _) = noiseless(60, 15, 3, seed);
        let cfg = RightConfig::new(DenseVector::zeros(15), s, 0.1, 10, 3).recording();
        let out = right_solve(Model::Linear, &data, &cfg, None).unwrap();
        for it in out.trajectory.unwrap() {
            prop_assert!(it.nnz() <= s);
        }
    }
}
