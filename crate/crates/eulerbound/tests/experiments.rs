use approx::assert_relative_eq;

use eulerbound::config::{CaseName, DensitySource, ExperimentConfig, FunctionalPreset, ModelPreset};
use eulerbound::experiments::{bounds, concentration, control, density, parametrix};
use eulerbound_core::concentration::{alpha_t, delta_bias};
use eulerbound_core::gaussianref::kinetic_metric;
use eulerbound_core::CaseTag;

fn gaussian_batches(big_c: f64) -> ExperimentConfig {
    ExperimentConfig { samples: 100, batches: 2000, seed: 11, big_c, ..Default::default() }
}

#[test]
fn exact_gaussian_concentration_holds() {
    let report = concentration::run_concentration_experiment(&gaussian_batches(1.0)).unwrap();
    assert_eq!(report.reference.source, "analytic");
    assert_eq!(report.delta_bias, 0.0);
    assert_eq!(report.rows.len(), 20);
    assert!(report.all_hold);
    let first = &report.rows[0];
    assert_eq!(first.r, 0.0);
    assert_eq!(first.bound, 2.0);
    assert!(first.empirical_freq <= 1.0);
    // Batch errors of M = 100 standard normals have sd 0.1.
    assert!((report.error_sd - 0.1).abs() < 0.01);
}

#[test]
fn domination_constant_shifts_by_delta() {
    let report = concentration::run_concentration_experiment(&gaussian_batches(2.0)).unwrap();
    let alpha = alpha_t(CaseTag::NonDegenerate, 1.0, 1.0);
    assert_relative_eq!(report.delta_bias, 2.0 * (alpha * 2f64.ln()).sqrt(), max_relative = 1e-14);
    assert_eq!(report.delta_bias, delta_bias(2.0, alpha).unwrap());
    for row in &report.rows {
        assert!(row.empirical_freq < row.bound, "r = {}: {} vs {}", row.r, row.empirical_freq, row.bound);
    }
    assert!(report.all_hold);
}

#[test]
fn concentration_is_reproducible() {
    let cfg = ExperimentConfig { batches: 300, ..gaussian_batches(1.0) };
    let a = concentration::run_concentration_experiment(&cfg).unwrap();
    let b = concentration::run_concentration_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    let other = concentration::run_concentration_experiment(&ExperimentConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.error_mean, other.error_mean);
}

fn trig(batches: usize) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelPreset::Trig,
        drift_amplitude: 0.5,
        diffusion_amplitude: 0.3,
        functional: FunctionalPreset::Clip,
        samples: 100,
        batches,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn control_run_reference() {
    let report = concentration::run_concentration_experiment(&trig(200)).unwrap();
    let reference = &report.reference;
    assert_eq!(reference.source, "control-run");
    assert_eq!(reference.control_samples, Some(100 * 100 * 200));
    let r_min = report.rows[1].r;
    assert!(reference.standard_error.unwrap() < r_min / 10.0);
}

#[test]
fn underpowered_control_run_is_a_statistics_error() {
    let err = concentration::run_concentration_experiment(&trig(20)).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let supplied = ExperimentConfig { reference_mean: Some(0.0), ..trig(20) };
    let report = concentration::run_concentration_experiment(&supplied).unwrap();
    assert_eq!(report.reference.source, "supplied");
}

#[test]
fn unresolvable_radius_is_a_statistics_error() {
    let cfg = ExperimentConfig { r_grid: Some(vec![0.0, 1.0]), ..gaussian_batches(1.0) };
    assert_eq!(concentration::run_concentration_experiment(&cfg).unwrap_err().exit_code(), 4);
}

#[test]
fn lower_curve_is_consistent() {
    let cfg = ExperimentConfig {
        samples: 1,
        batches: 4000,
        seed: 3,
        functional: FunctionalPreset::Abs,
        lower: true,
        rho0: Some(1.0),
        beta: Some(1.0),
        ..Default::default()
    };
    let report = concentration::run_concentration_experiment(&cfg).unwrap();
    let lower = report.lower.as_ref().unwrap();
    assert_eq!(lower.curve.len(), report.rows.len());
    let validated: Vec<_> = lower.curve.iter().filter(|r| r.consistent.is_some()).collect();
    assert!(validated.len() >= 5);
    assert!(validated.iter().all(|r| r.consistent == Some(true)));
    for row in &lower.curve {
        assert_eq!(row.consistent.is_some(), row.bound >= concentration::LOWER_VALIDATION_LEVEL);
    }
    // Plateau below βρ0: 2exp(−ᾱ⁻¹).
    assert_relative_eq!(lower.curve[0].bound, 2.0 * (-lower.bar_alpha_inv).exp(), max_relative = 1e-14);
}

#[test]
fn bound_table_single_case() {
    let cfg = ExperimentConfig { samples: 10_000, epsilons: vec![0.05], ..Default::default() };
    let table = bounds::run_bound_table(&cfg).unwrap();
    assert_eq!(table.cases.len(), 1);
    let row = table.cases[0].radii[0];
    assert_relative_eq!(row.radius, (2.0 * 40f64.ln() / 1e4).sqrt(), max_relative = 1e-12);
    assert_relative_eq!(row.radius, 0.027162, max_relative = 1e-4);
    assert_eq!(row.total, row.radius);
}

#[test]
fn bound_table_even_dim_has_kinetic_column() {
    let cfg = ExperimentConfig {
        dim: 2,
        c: 0.7,
        big_c: 1.5,
        horizon: 2.0,
        lower: true,
        rho0: Some(1.0),
        beta: Some(1.0),
        functional: FunctionalPreset::Norm,
        ..Default::default()
    };
    let table = bounds::run_bound_table(&cfg).unwrap();
    assert_eq!(table.cases.len(), 2);
    let kinetic = &table.cases[1];
    assert_eq!(kinetic.case, "kinetic");
    assert_eq!(kinetic.alpha_t, alpha_t(CaseTag::Kinetic, 0.7, 2.0));
    assert_eq!(kinetic.delta_bias, delta_bias(1.5, kinetic.alpha_t).unwrap());
    for r in &kinetic.radii {
        assert_relative_eq!(r.total, r.radius + kinetic.delta_bias, max_relative = 1e-15);
    }
    assert!(kinetic.lower.is_some());
}

#[test]
fn chi_vanishes_for_unit_domination_in_the_plane() {
    let cfg = ExperimentConfig {
        dim: 2,
        lower: true,
        rho0: Some(1.0),
        beta: Some(1.0),
        functional: FunctionalPreset::Norm,
        ..Default::default()
    };
    let table = bounds::run_bound_table(&cfg).unwrap();
    let lower = table.cases[0].lower.as_ref().unwrap();
    assert_eq!(lower.chi, 0.0);
    assert_eq!(lower.bar_alpha_inv, 1.0 / (2.0 * cfg.c * cfg.horizon));
}

#[test]
fn lower_constants_need_a_growth_spec() {
    let cfg = ExperimentConfig { lower: true, ..Default::default() };
    assert_eq!(bounds::run_bound_table(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn density_check_rejects_high_dimensions() {
    let cfg = ExperimentConfig { dim: 3, ..Default::default() };
    assert_eq!(density::run_density_check(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn perturbed_model_envelope_on_ck_table() {
    let cfg = ExperimentConfig {
        model: ModelPreset::Trig,
        diffusion_amplitude: 0.3,
        drift_amplitude: 0.5,
        density_source: DensitySource::Ck,
        grid_points: 400,
        ..Default::default()
    };
    let (report, cells) = density::run_density_check(&cfg).unwrap();
    assert_eq!(report.source, "ck");
    assert_eq!(report.region_cells, cells.len());
    let fit = report.fit.unwrap();
    assert!(fit.holds);
    assert!(fit.big_c > 1.0);
    assert_eq!(report.fit_at_grid_edge, Some(false));
    let again = ExperimentConfig { c: fit.c, big_c: fit.big_c, fit: false, ..cfg.clone() };
    let (checked, _) = density::run_density_check(&again).unwrap();
    assert!(checked.envelope.holds);
    let tight = ExperimentConfig { big_c: 1.0 + (fit.big_c - 1.0) / 2.0, ..again };
    assert!(!density::run_density_check(&tight).unwrap().0.envelope.holds);
}

/// The exact σ = 1 kinetic law N(·, Q_T) is the c = 2 kernel; a two-sided
/// envelope cannot be tight at any c, so the fit lands near c ≈ 2.3, C ≈ 1.3.
#[test]
fn kinetic_histogram_fit() {
    let cfg = ExperimentConfig {
        case: CaseName::Kinetic,
        dim: 2,
        seed: 4,
        density_samples: 1_000_000,
        ..Default::default()
    };
    let (report, _) = density::run_density_check(&cfg).unwrap();
    let fit = report.fit.unwrap();
    assert!(fit.holds);
    assert!((2.0..2.6).contains(&fit.c), "c = {}", fit.c);
    assert!((1.2..1.4).contains(&fit.big_c), "C = {}", fit.big_c);
    assert!(report.min_region_count.unwrap() >= 50);
}

#[test]
fn too_few_counts_in_region_is_a_statistics_error() {
    let cfg = ExperimentConfig { density_samples: 1_000_000, density_region_fraction: 0.001, ..Default::default() };
    assert_eq!(density::run_density_check(&cfg).unwrap_err().exit_code(), 4);
}

#[test]
fn parametrix_against_ck() {
    let cfg = ExperimentConfig {
        model: ModelPreset::Trig,
        diffusion_amplitude: 0.1,
        steps: 6,
        grid_points: 300,
        c: 0.5,
        big_c: 5.0,
        ..Default::default()
    };
    let out = parametrix::run_parametrix(&cfg).unwrap();
    let report = &out.report;
    assert!(report.sup_relative_error < 1e-2);
    assert_eq!(report.term_norms.len(), 4);
    assert!(report.term_norms.windows(2).skip(1).all(|w| w[1] < w[0]));
    assert!((report.ck_mass - 1.0).abs() < 1e-6);
    assert_eq!(out.series.len(), out.x_prime.len());
    assert!(report.envelope_ck.holds);
    let unit = parametrix::run_parametrix(&ExperimentConfig { c: 1.0, big_c: 1.0, ..cfg }).unwrap();
    assert!(!unit.report.envelope_ck.holds);
}

#[test]
fn geodesic_energy_matches_metric() {
    let cfg = ExperimentConfig {
        case: CaseName::Kinetic,
        dim: 2,
        horizon: 1.5,
        x0: Some(vec![0.3, -1.0]),
        x_prime: Some(vec![1.0, 2.0]),
        ..Default::default()
    };
    let out = control::run_control_geodesic(&cfg).unwrap();
    let r = &out.report;
    assert_relative_eq!(r.twice_metric, 2.0 * kinetic_metric(1.5, &[0.3, -1.0], &[1.0, 2.0], 1), max_relative = 1e-14);
    assert_relative_eq!(r.energy, r.twice_metric, max_relative = 1e-9);
    assert_relative_eq!(r.energy_closed_form, r.twice_metric, max_relative = 1e-9);
    assert!(r.endpoint_error < 1e-6);
}
