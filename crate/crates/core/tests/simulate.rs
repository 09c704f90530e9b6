use std::sync::Arc;

use approx::assert_relative_eq;
use eulerbound_core::linalg::Matrix;
use eulerbound_core::model::{AssumptionConstants, ConstantCoefficients, FnCoefficients};
use eulerbound_core::simulate::{
    self, euler_step_a, euler_step_b, kinetic_covariance, kinetic_covariance_factor, mc_deviation, simulate_range,
    simulate_terminal, Stepper,
};
use eulerbound_core::{CaseTag, Error, RngSpec, SchemeGrid, SdeModel};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Asserts each entry of the sample covariance of `batch` is within 3 standard
/// errors of `expected`, using the Gaussian fourth-moment formula
/// `Var(ŝ_ij) ≈ (σ_ii σ_jj + σ_ij²)/M`.
fn assert_cov_within_3se(samples: &[f64], d: usize, expected: &[f64]) {
    let m = samples.len() / d;
    let mean: Vec<f64> = (0..d).map(|i| samples.iter().skip(i).step_by(d).sum::<f64>() / m as f64).collect();
    for i in 0..d {
        for j in 0..d {
            let s: f64 = samples.chunks_exact(d).map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (m - 1) as f64;
            let e = expected[i * d + j];
            let se = ((expected[i * d + i] * expected[j * d + j] + e * e) / m as f64).sqrt();
            assert!((s - e).abs() < 3.0 * se, "cov[{i}][{j}] = {s}, expected {e} ± 3·{se}");
        }
    }
}

fn one_step_samples(model: &SdeModel, delta: f64, x: &[f64], m: usize, seed: u64) -> Vec<f64> {
    let rng = RngSpec::new(seed, 0);
    let nd = simulate::draws_per_step(model);
    let mut g = vec![0.0; nd];
    let mut out = Vec::with_capacity(m * model.dim());
    for i in 0..m {
        simulate::fill_normals(&mut rng.substream(i as u64), &mut g);
        let y = match model.case() {
            CaseTag::NonDegenerate => euler_step_a(model, 0.0, x, delta, &g),
            CaseTag::Kinetic => euler_step_b(model, 0.0, x, delta, &g),
        };
        out.extend(y.unwrap());
    }
    out
}

#[test]
fn step_a_maps_draw_and_drift() {
    let m = SdeModel::gaussian(CaseTag::NonDegenerate, 2).unwrap();
    assert_eq!(euler_step_a(&m, 0.0, &[0.0, 0.0], 1.0, &[0.3, -1.2]).unwrap(), vec![0.3, -1.2]);
    let m = SdeModel::constant(CaseTag::NonDegenerate, 1, 1.0, 1.0).unwrap();
    assert_eq!(euler_step_a(&m, 0.0, &[0.0], 0.5, &[0.0]).unwrap(), vec![0.5]);
}

#[test]
fn step_a_one_step_moments() {
    let model = SdeModel::constant(CaseTag::NonDegenerate, 1, 0.3, 1.2).unwrap();
    let s = one_step_samples(&model, 0.1, &[0.0], 100_000, 11);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (mu, sig2) = (0.03, 1.44 * 0.1);
    assert!((mean - mu).abs() < 3.0 * (sig2 / n).sqrt(), "mean {mean}");
    assert!((var - sig2).abs() < 3.0 * sig2 * (2.0 / n).sqrt(), "var {var}");
}

#[test]
fn step_b_pure_transport() {
    let model = SdeModel::gaussian(CaseTag::Kinetic, 4).unwrap();
    let x = [0.5, -1.0, 2.0, 3.0];
    let y = euler_step_b(&model, 0.0, &x, 0.25, &[0.0; 4]).unwrap();
    assert_eq!(y, vec![0.5, -1.0, 2.0 + 0.125, 3.0 - 0.25]);
}

#[test]
fn step_b_unit_covariance() {
    let model = SdeModel::gaussian(CaseTag::Kinetic, 2).unwrap();
    let s = one_step_samples(&model, 1.0, &[0.0, 0.0], 100_000, 21);
    assert_cov_within_3se(&s, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
}

#[test]
fn step_b_scaled_covariance() {
    let model = SdeModel::constant(CaseTag::Kinetic, 2, 0.0, 2.0).unwrap();
    let dt = 0.3;
    let s = one_step_samples(&model, dt, &[0.0, 0.0], 100_000, 22);
    let c = [4.0 * dt, 2.0 * dt * dt, 2.0 * dt * dt, 4.0 * dt.powi(3) / 3.0];
    assert_cov_within_3se(&s, 2, &c);
}

#[test]
fn stepper_matches_free_functions() {
    let model = SdeModel::constant(CaseTag::Kinetic, 4, 0.2, 1.5).unwrap();
    let x = [0.1, 0.2, 0.3, 0.4];
    let g = [0.5, -0.5, 1.0, 2.0];
    let mut y = x;
    Stepper::new(&model, 0.2).unwrap().step(0.0, &mut y, &g).unwrap();
    let z = euler_step_b(&model, 0.0, &x, 0.2, &g).unwrap();
    for (a, b) in y.iter().zip(&z) {
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }
}

#[test]
fn gaussian_terminal_variance_for_every_n() {
    let model = SdeModel::gaussian(CaseTag::NonDegenerate, 1).unwrap();
    let t = 1.7;
    for (k, &n) in [1usize, 3, 10, 40].iter().enumerate() {
        let grid = SchemeGrid::new(t, n).unwrap();
        let b = simulate_terminal(&model, &grid, &[0.0], &RngSpec::new(5, k as u64), 50_000).unwrap();
        let var = b.covariance()[(0, 0)];
        assert!((var - t).abs() < 3.0 * t * (2.0 / 50_000.0f64).sqrt(), "N = {n}: var {var}");
    }
}

#[test]
fn kinetic_terminal_covariance_for_every_n() {
    // Cov(W_1, ∫₀¹ W_s ds) = [[1, 1/2], [1/2, 1/3]] by Itô isometry.
    let model = SdeModel::gaussian(CaseTag::Kinetic, 2).unwrap();
    for (k, &n) in [1usize, 4, 16].iter().enumerate() {
        let grid = SchemeGrid::new(1.0, n).unwrap();
        let b = simulate_terminal(&model, &grid, &[0.0, 0.0], &RngSpec::new(6, k as u64), 50_000).unwrap();
        assert_cov_within_3se(b.as_flat(), 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
    }
}

#[test]
fn constant_coefficient_terminal_law_chi_squared() {
    let (b, s, t, n) = (0.5, 0.8, 2.0, 7);
    let model = SdeModel::constant(CaseTag::NonDegenerate, 1, b, s).unwrap();
    let grid = SchemeGrid::new(t, n).unwrap();
    let m = 100_000;
    let batch = simulate_terminal(&model, &grid, &[0.25], &RngSpec::new(9, 0), m).unwrap();
    let law = Normal::new(0.25 + b * t, s * t.sqrt()).unwrap();
    let bins = 50;
    let mut counts = vec![0usize; bins];
    for x in batch.iter() {
        let u = law.cdf(x[0]);
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let e = m as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < crit, "chi-squared {stat} ≥ {crit}");
}

#[test]
fn kinetic_cross_covariance_matches_a_delta_squared_over_two() {
    let model = SdeModel::constant(CaseTag::Kinetic, 2, 0.0, 1.5).unwrap();
    let dt = 0.4;
    let s = one_step_samples(&model, dt, &[1.0, -1.0], 100_000, 31);
    let a = 2.25;
    let c = [a * dt, a * dt * dt / 2.0, a * dt * dt / 2.0, a * dt.powi(3) / 3.0];
    assert_cov_within_3se(&s, 2, &c);
}

#[test]
fn mc_deviation_examples() {
    let model = SdeModel::gaussian(CaseTag::NonDegenerate, 1).unwrap();
    let grid = SchemeGrid::new(1.0, 5).unwrap();
    let m = 10_000;
    let batch = simulate_terminal(&model, &grid, &[0.0], &RngSpec::new(1, 0), m).unwrap();
    assert_eq!(mc_deviation(&batch, |_| 3.5, 3.5).unwrap(), 0.0);
    let dev = mc_deviation(&batch, |x| x[0], 0.0).unwrap();
    assert!(dev.abs() < 4.0 * (1.0 / m as f64).sqrt(), "CLT deviation {dev}");

    let f = |x: &[f64]| x[0].sin() + x[0] * x[0];
    let control = simulate_terminal(&model, &grid, &[0.0], &RngSpec::new(1, 1), 100 * m).unwrap();
    let reference = control.iter().map(f).sum::<f64>() / control.len() as f64;
    let vals: Vec<f64> = batch.iter().map(f).collect();
    let mean = vals.iter().sum::<f64>() / m as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let dev = mc_deviation(&batch, f, reference).unwrap();
    assert!(dev.abs() < 4.0 * (var / m as f64).sqrt(), "deviation {dev} vs sd {}", (var / m as f64).sqrt());
}

#[test]
fn batches_are_reproducible_and_chunk_independent() {
    let model = SdeModel::constant(CaseTag::Kinetic, 2, 0.1, 0.9).unwrap();
    let grid = SchemeGrid::new(1.0, 8).unwrap();
    let rng = RngSpec::new(42, 3);
    let a = simulate_terminal(&model, &grid, &[0.0, 0.0], &rng, 1000).unwrap();
    let b = simulate_terminal(&model, &grid, &[0.0, 0.0], &rng, 1000).unwrap();
    assert_eq!(a.as_flat(), b.as_flat());
    let mut pieces = vec![0.0; 2000];
    for (k, chunk) in pieces.chunks_mut(2 * 137).enumerate() {
        let start = (k * 137) as u64;
        let end = start + chunk.len() as u64 / 2;
        simulate_range(&model, &grid, &[0.0, 0.0], &rng, start..end, chunk).unwrap();
    }
    assert_eq!(a.as_flat(), &pieces[..]);
    let c = simulate_terminal(&model, &grid, &[0.0, 0.0], &rng.with_stream(4), 1000).unwrap();
    assert_ne!(a.as_flat(), c.as_flat());
}

#[test]
fn non_finite_coefficients_report_the_sample() {
    let coeffs = FnCoefficients {
        drift: |_t: f64, x: &[f64], out: &mut [f64]| out[0] = if x[0] > 0.5 { f64::NAN } else { 1.0 },
        sigma: |_t: f64, _x: &[f64], out: &mut [f64]| out[0] = 1e-9,
    };
    let model = SdeModel::new(CaseTag::NonDegenerate, 1, Arc::new(coeffs), AssumptionConstants::new(1e18, 1.0, 1.0).unwrap())
        .unwrap();
    let grid = SchemeGrid::new(1.0, 4).unwrap();
    match simulate_terminal(&model, &grid, &[0.0], &RngSpec::new(0, 0), 3) {
        Err(Error::NonFinite { sample, .. }) => assert_eq!(sample, Some(0)),
        other => panic!("expected a non-finite error, got {other:?}"),
    }
}

#[test]
fn constant_model_uses_given_matrix() {
    let sigma = Matrix::from_row_major(2, 2, vec![1.0, 0.0, 0.5, 2.0]).unwrap();
    let coeffs = ConstantCoefficients { drift: vec![0.0, 0.0], sigma };
    let model = SdeModel::new(CaseTag::NonDegenerate, 2, Arc::new(coeffs), AssumptionConstants::new(10.0, 1.0, 1.0).unwrap())
        .unwrap();
    let s = one_step_samples(&model, 0.5, &[0.0, 0.0], 100_000, 41);
    // a = σσᵀ = [[1, 0.5], [0.5, 4.25]], scaled by Δ.
    assert_cov_within_3se(&s, 2, &[0.5, 0.25, 0.25, 2.125]);
}

proptest! {
    #[test]
    fn kinetic_factor_reproduces_covariance(
        b in proptest::collection::vec(-2.0f64..2.0, 4),
        ridge in 0.05f64..1.0,
        delta in 1e-3f64..10.0,
    ) {
        let bm = Matrix::from_row_major(2, 2, b).unwrap();
        let mut a = bm.matmul(&bm.transpose());
        a[(0, 0)] += ridge;
        a[(1, 1)] += ridge;
        let l = kinetic_covariance_factor(&a, delta).unwrap();
        let cov = kinetic_covariance(&a, delta);
        let llt = l.matmul(&l.transpose());
        prop_assert!(llt.max_abs_diff(&cov) <= 1e-12 * cov.max_abs());
    }
}
