//! Truncated parametrix series against the Chapman–Kolmogorov table.

use std::path::{Path, PathBuf};

use serde::Serialize;

use eulerbound_core::parametrix::{aronson_envelope_check, chapman_kolmogorov_density, parametrix_series, Grid1D};

use crate::config::ExperimentConfig;
use crate::error::{config_err, Result};
use crate::experiments::density::Envelope;
use crate::io::{write_json, CsvWriter};
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParametrixReport {
    pub config_hash: String,
    #[serde(rename = "N")]
    pub steps: usize,
    pub grid_points: usize,
    pub grid: (f64, f64),
    pub r_max: usize,
    pub term_norms: Vec<f64>,
    pub divergence_warning: Option<String>,
    /// `sup|series − ck| / sup|ck|`.
    pub sup_relative_error: f64,
    pub series_mass: f64,
    pub ck_mass: f64,
    pub series_signed: bool,
    /// Envelope of the CK table at the configured `(c, C)`.
    pub envelope_ck: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixOutput {
    pub report: ParametrixReport,
    pub x_prime: Vec<f64>,
    pub series: Vec<f64>,
    pub ck: Vec<f64>,
}

pub fn run_parametrix(cfg: &ExperimentConfig) -> Result<ParametrixOutput> {
    if cfg.dim != 1 {
        return Err(config_err!("the parametrix engine is 1D, got dim = {}", cfg.dim));
    }
    let model = presets::build_model(cfg)?;
    let times = presets::scheme_grid(cfg)?;
    let gauss = presets::gauss_params(cfg)?;
    let x0 = cfg.start()[0];
    let grid = Grid1D::auto(&model, x0, cfg.horizon, cfg.grid_points, cfg.grid_sigmas)?;
    let series = parametrix_series(&model, &times, 0, cfg.steps, x0, &grid, cfg.r_max.min(cfg.steps))?;
    let ck = chapman_kolmogorov_density(&model, &times, 0, cfg.steps, x0, &grid)?;
    let diff = series.density.values.iter().zip(&ck.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let env = aronson_envelope_check(&ck, gauss, cfg.horizon, x0)?;
    let report = ParametrixReport {
        config_hash: cfg.hash(),
        steps: cfg.steps,
        grid_points: grid.len(),
        grid: (grid.lo(), grid.hi()),
        r_max: series.term_norms.len() - 1,
        term_norms: series.term_norms.clone(),
        divergence_warning: series.divergence_warning.clone(),
        sup_relative_error: diff / ck.sup_norm(),
        series_mass: series.density.mass(),
        ck_mass: ck.mass(),
        series_signed: series.density.signed,
        envelope_ck: Envelope {
            c: gauss.shape,
            big_c: gauss.domination,
            upper_ratio: env.upper_ratio,
            lower_ratio: env.lower_ratio,
            holds: env.holds(),
        },
    };
    Ok(ParametrixOutput { report, x_prime: grid.points(), series: series.density.values, ck: ck.values })
}

/// Writes `parametrix.csv` and `parametrix.json`.
pub fn write(out: &ParametrixOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let csv = out_dir.join("parametrix.csv");
    let header = ["x_prime", "series", "ck", "abs_diff"].map(String::from);
    let mut w = CsvWriter::create(&csv, &out.report.config_hash, &header)?;
    for ((x, s), c) in out.x_prime.iter().zip(&out.series).zip(&out.ck) {
        w.row(&[*x, *s, *c, (s - c).abs()])?;
    }
    w.finish()?;
    let json = out_dir.join("parametrix.json");
    write_json(&json, &out.report)?;
    Ok(vec![csv, json])
}
