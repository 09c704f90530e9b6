//! Empirical tail frequencies of the Monte Carlo error against the bounds.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use eulerbound_core::concentration::{
    alpha_t, bar_alpha_inv, bar_delta, confidence_radius, delta_bias, lower_tail_bound, optimize_theta,
    upper_tail_bound, BarDeltaOptions, LowerInput,
};
use eulerbound_core::model::case_name;
use eulerbound_core::simulate::simulate_range;
use eulerbound_core::RngSpec;

use crate::config::ExperimentConfig;
use crate::error::{config_err, AppError, Result};
use crate::io::{write_json, CsvWriter};
use crate::parallel::functional_moments;
use crate::presets;
use crate::stats::{wilson_lower, wilson_upper, Z_99};

/// Offset between the experiment stream and its control-run stream.
pub const CONTROL_STREAM_OFFSET: u64 = 1 << 32;

/// Samples in the control run, per experiment sample.
pub const CONTROL_FACTOR: u64 = 100;

/// Smallest bound level of the default `r` grid.
pub const MIN_GRID_LEVEL: f64 = 0.01;

/// Lower-bound rows are compared with data only where the bound is at least this.
pub const LOWER_VALIDATION_LEVEL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMean {
    pub value: f64,
    /// `supplied`, `analytic` or `control-run`.
    pub source: String,
    pub standard_error: Option<f64>,
    pub control_samples: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperRow {
    pub r: f64,
    pub exceedances: u64,
    /// Fraction of batches with `|E_MC| ≥ r + δ`.
    pub empirical_freq: f64,
    pub bound: f64,
    pub wilson_upper: f64,
    /// `wilson_upper ≤ bound`.
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerRow {
    pub r: f64,
    /// `2 exp(−M ᾱ⁻¹ max(r/β, ρ0)²)`, unclipped.
    pub bound: f64,
    /// Fraction of batches with `|E_MC| ≥ r − δ̄`; only where the bound is testable.
    pub empirical_freq: Option<f64>,
    pub wilson_lower: Option<f64>,
    pub wilson_upper: Option<f64>,
    /// `wilson_upper ≥ bound`, i.e. the data do not contradict the bound.
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerReport {
    pub rho0: f64,
    pub beta: f64,
    pub a_measure: f64,
    pub theta: Option<f64>,
    pub big_lambda: f64,
    pub chi: f64,
    pub bar_alpha_inv: f64,
    pub bar_delta: f64,
    pub gamma_f: f64,
    pub f_lower: f64,
    pub curve: Vec<LowerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub config_hash: String,
    pub case: String,
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(rename = "M")]
    pub samples: usize,
    pub batches: usize,
    pub alpha_t: f64,
    pub delta_bias: f64,
    pub reference: ReferenceMean,
    /// Mean and standard deviation of `E_MC` over batches.
    pub error_mean: f64,
    pub error_sd: f64,
    pub rows: Vec<UpperRow>,
    pub lower: Option<LowerReport>,
    pub all_hold: bool,
}

/// Batch errors `E_MC`, batch `k` using samples `kM..(k + 1)M` of the stream.
pub fn batch_errors(cfg: &ExperimentConfig, reference: f64) -> Result<Vec<f64>> {
    let model = presets::build_model(cfg)?;
    let grid = presets::scheme_grid(cfg)?;
    let f = presets::functional(cfg);
    let x0 = cfg.start();
    let rng = RngSpec::new(cfg.seed, cfg.stream);
    let (m, d) = (cfg.samples as u64, cfg.dim);
    let results: Vec<Result<f64>> = (0..cfg.batches as u64)
        .into_par_iter()
        .map(|k| {
            let mut out = vec![0.0; m as usize * d];
            simulate_range(&model, &grid, &x0, &rng, k * m..(k + 1) * m, &mut out)?;
            let sum: f64 = out.chunks_exact(d).map(&f).sum();
            let e = sum / m as f64 - reference;
            if !e.is_finite() {
                return Err(eulerbound_core::Error::NonFinite { sample: None, detail: format!("batch {k} error {e}") }.into());
            }
            Ok(e)
        })
        .collect();
    results.into_iter().collect()
}

/// Supplied, analytic, or control-run reference mean. A control run must
/// reach a standard error below `r_min/10`.
pub fn reference_mean(cfg: &ExperimentConfig, r_min: f64) -> Result<ReferenceMean> {
    if let Some(v) = cfg.reference_mean {
        return Ok(ReferenceMean { value: v, source: "supplied".into(), standard_error: None, control_samples: None });
    }
    if let Some(v) = presets::analytic_mean(cfg) {
        return Ok(ReferenceMean { value: v, source: "analytic".into(), standard_error: None, control_samples: None });
    }
    let model = presets::build_model(cfg)?;
    let grid = presets::scheme_grid(cfg)?;
    let f = presets::functional(cfg);
    let n = CONTROL_FACTOR * cfg.samples as u64 * cfg.batches as u64;
    if n < 2 {
        return Err(config_err!("control run needs at least 2 samples"));
    }
    let rng = RngSpec::new(cfg.seed, cfg.stream.wrapping_add(CONTROL_STREAM_OFFSET));
    let (s, s2) = functional_moments(&model, &grid, &cfg.start(), &rng, 0..n, &f)?;
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt();
    if !(se < r_min / 10.0) {
        return Err(AppError::Statistics(format!(
            "control-run standard error {se:e} is not below r_min/10 = {:e}; supply reference_mean or raise batches",
            r_min / 10.0
        )));
    }
    Ok(ReferenceMean { value: mean, source: "control-run".into(), standard_error: Some(se), control_samples: Some(n) })
}

/// The configured `r` grid, or `r_points` radii on `[0, r_max]` where the
/// bound at `r_max` is `max(0.01, 2·w₀)` with `w₀` the Wilson limit of zero
/// exceedances. Radii whose bound lies below `w₀` cannot be validated and
/// are a statistics error.
pub fn r_grid(cfg: &ExperimentConfig, alpha: f64) -> Result<Vec<f64>> {
    let w0 = wilson_upper(0, cfg.batches as u64, Z_99);
    let grid = match &cfg.r_grid {
        Some(g) => g.clone(),
        None => {
            let level = MIN_GRID_LEVEL.max(2.0 * w0);
            if level >= 2.0 {
                return Err(AppError::Statistics(format!("{} batches cannot resolve any tail probability", cfg.batches)));
            }
            let r_max = confidence_radius(level, cfg.samples, alpha)?;
            let k = cfg.r_points - 1;
            (0..=k).map(|i| r_max * i as f64 / k as f64).collect()
        }
    };
    if let Some(r) = grid.iter().find(|r| upper_tail_bound(**r, cfg.samples, alpha) < w0) {
        return Err(AppError::Statistics(format!(
            "r = {r} has bound {:e}, below the resolution {w0:e} of {} batches",
            upper_tail_bound(*r, cfg.samples, alpha),
            cfg.batches
        )));
    }
    Ok(grid)
}

pub fn run_concentration_experiment(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    let case = cfg.case_tag();
    let gauss = presets::gauss_params(cfg)?;
    let alpha = alpha_t(case, gauss.shape, cfg.horizon);
    let delta = delta_bias(gauss.domination, alpha)?;
    let rs = r_grid(cfg, alpha)?;
    let r_min = rs.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    let lower_setup = if cfg.lower { Some(lower_constants(cfg, alpha)?) } else { None };
    let reference = reference_mean(cfg, if r_min.is_finite() { r_min } else { 1.0 })?;
    let errors = batch_errors(cfg, reference.value)?;
    let b = errors.len() as u64;
    let count_at_least = |thr: f64| errors.iter().filter(|e| e.abs() >= thr).count() as u64;

    let rows: Vec<UpperRow> = rs
        .iter()
        .map(|&r| {
            let k = count_at_least(r + delta);
            let bound = upper_tail_bound(r, cfg.samples, alpha);
            let wu = wilson_upper(k, b, Z_99);
            UpperRow { r, exceedances: k, empirical_freq: k as f64 / b as f64, bound, wilson_upper: wu, holds: wu <= bound }
        })
        .collect();

    let lower = lower_setup.map(|mut l| {
        l.curve = rs
            .iter()
            .map(|&r| {
                let bound = lower_tail_bound(r, cfg.samples, l.bar_alpha_inv, l.beta, l.rho0);
                if bound < LOWER_VALIDATION_LEVEL {
                    return LowerRow { r, bound, empirical_freq: None, wilson_lower: None, wilson_upper: None, consistent: None };
                }
                let k = count_at_least(r - l.bar_delta);
                let wu = wilson_upper(k, b, Z_99);
                LowerRow {
                    r,
                    bound,
                    empirical_freq: Some(k as f64 / b as f64),
                    wilson_lower: Some(wilson_lower(k, b, Z_99)),
                    wilson_upper: Some(wu),
                    consistent: Some(wu >= bound),
                }
            })
            .collect();
        l
    });

    let mean = errors.iter().sum::<f64>() / b as f64;
    let var = if b > 1 { errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (b - 1) as f64 } else { 0.0 };
    let all_hold = rows.iter().all(|r| r.holds)
        && lower.as_ref().is_none_or(|l| l.curve.iter().all(|r| r.consistent != Some(false)));
    Ok(ConcentrationReport {
        config_hash: cfg.hash(),
        case: case_name(case),
        c: gauss.shape,
        big_c: gauss.domination,
        horizon: cfg.horizon,
        steps: cfg.steps,
        samples: cfg.samples,
        batches: cfg.batches,
        alpha_t: alpha,
        delta_bias: delta,
        reference,
        error_mean: mean,
        error_sd: var.sqrt(),
        rows,
        lower,
        all_hold,
    })
}

/// Lower-bound constants with an empty curve.
pub fn lower_constants(cfg: &ExperimentConfig, alpha: f64) -> Result<LowerReport> {
    let f = presets::functional(cfg);
    let growth = presets::growth_spec(cfg, &f)?;
    let gauss = presets::gauss_params(cfg)?;
    let case = cfg.case_tag();
    let x0 = cfg.start();
    let theta = if cfg.dim % 2 == 1 { Some(cfg.theta.unwrap_or(2.0)) } else { None };
    let input = LowerInput::new(case, gauss, cfg.horizon, &growth, x0.clone(), theta);
    let form = cfg.lambda_form.into();
    let consts = if cfg.optimize_theta && cfg.dim % 2 == 1 { optimize_theta(&input, form)? } else { bar_alpha_inv(&input, form)? };
    let opts = BarDeltaOptions { rng: RngSpec::new(cfg.seed, cfg.stream.wrapping_add(2 * CONTROL_STREAM_OFFSET)), ..Default::default() };
    let bd = bar_delta(case, gauss, cfg.horizon, alpha, &f, &x0, &growth, &opts)?;
    Ok(LowerReport {
        rho0: growth.rho0,
        beta: growth.beta,
        a_measure: growth.a_measure,
        theta: consts.theta,
        big_lambda: consts.big_lambda,
        chi: consts.chi,
        bar_alpha_inv: consts.bar_alpha_inv,
        bar_delta: bd.value,
        gamma_f: bd.gamma_f,
        f_lower: bd.f_lower,
        curve: Vec::new(),
    })
}

/// Writes `concentration.csv` and `concentration.json`.
pub fn write(report: &ConcentrationReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let csv = out_dir.join("concentration.csv");
    let header = ["r", "empirical_freq", "bound", "wilson_upper"].map(String::from);
    let mut w = CsvWriter::create(&csv, &report.config_hash, &header)?;
    for row in &report.rows {
        w.row(&[row.r, row.empirical_freq, row.bound, row.wilson_upper])?;
    }
    w.finish()?;
    let json = out_dir.join("concentration.json");
    write_json(&json, report)?;
    Ok(vec![csv, json])
}
