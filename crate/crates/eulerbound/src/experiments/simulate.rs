//! Terminal samples of the scheme.

use std::path::{Path, PathBuf};

use serde::Serialize;

use eulerbound_core::model::case_name;
use eulerbound_core::{RngSpec, TerminalBatch};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{write_f64_le, write_json, CsvWriter};
use crate::parallel::simulate_samples;
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub config_hash: String,
    pub case: String,
    pub dim: usize,
    /// `samples × batches` terminal values.
    pub count: usize,
    pub mean: Vec<f64>,
    /// Row-major sample covariance.
    pub covariance: Vec<f64>,
}

/// `samples × batches` terminal values from `x0` on the configured stream.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<(SimulationSummary, TerminalBatch)> {
    let model = presets::build_model(cfg)?;
    let grid = presets::scheme_grid(cfg)?;
    let rng = RngSpec::new(cfg.seed, cfg.stream);
    let n = cfg.samples * cfg.batches;
    let xs = simulate_samples(&model, &grid, &cfg.start(), &rng, 0..n as u64)?;
    let batch = TerminalBatch::new(model.case(), grid, cfg.start(), xs)?;
    let summary = SimulationSummary {
        config_hash: cfg.hash(),
        case: case_name(model.case()),
        dim: model.dim(),
        count: n,
        mean: batch.mean(),
        covariance: batch.covariance().as_slice().to_vec(),
    };
    Ok((summary, batch))
}

/// Writes `samples.csv`, `simulate.json` and, if `binary` is set, `samples.bin`.
pub fn write(cfg: &ExperimentConfig, summary: &SimulationSummary, batch: &TerminalBatch, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut header = vec!["sample".to_string()];
    header.extend((1..=batch.dim()).map(|i| format!("x_{i}")));
    let csv = out_dir.join("samples.csv");
    let mut w = CsvWriter::create(&csv, &summary.config_hash, &header)?;
    for (i, x) in batch.iter().enumerate() {
        w.labeled_row(&i.to_string(), x)?;
    }
    w.finish()?;
    let json = out_dir.join("simulate.json");
    write_json(&json, summary)?;
    let mut files = vec![csv, json];
    if cfg.binary {
        let bin = out_dir.join("samples.bin");
        write_f64_le(&bin, batch.as_flat())?;
        files.push(bin);
    }
    Ok(files)
}
