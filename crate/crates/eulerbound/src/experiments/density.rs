//! Two-sided Gaussian envelope of the scheme's terminal law, from a
//! histogram (d ≤ 2) or a Chapman–Kolmogorov table (1D), with an optional
//! fit of `(c, C)`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use eulerbound_core::gaussianref::{p_c_density, KernelSpec};
use eulerbound_core::model::case_name;
use eulerbound_core::parametrix::{chapman_kolmogorov_density, Grid1D};
use eulerbound_core::{CaseTag, RngSpec};

use crate::config::{DensitySource, ExperimentConfig, MIN_HISTOGRAM_SAMPLES};
use crate::error::{config_err, AppError, Result};
use crate::io::{write_json, CsvWriter};
use crate::parallel::simulate_samples;
use crate::presets;
use crate::stats::scott_width;

/// Histogram range in standard deviations on each side of the sample mean.
pub const RANGE_SDS: f64 = 6.0;

/// Fewest cells a reported region may have.
pub const MIN_REGION_CELLS: usize = 5;

/// A histogram bin or a grid point of the reported region.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub center: Vec<f64>,
    /// Bin half-widths; zero for grid points.
    pub half_width: Vec<f64>,
    pub count: Option<u64>,
    pub empirical: f64,
}

impl Cell {
    /// `p_c` averaged over the bin by the tensor Simpson rule, or at the point.
    pub fn reference(&self, spec: &KernelSpec) -> f64 {
        if self.half_width.iter().all(|h| *h == 0.0) {
            return p_c_density(spec, &self.center);
        }
        const NODES: [(f64, f64); 3] = [(-1.0, 1.0 / 6.0), (0.0, 4.0 / 6.0), (1.0, 1.0 / 6.0)];
        let d = self.center.len();
        let mut y = self.center.clone();
        let mut total = 0.0;
        for k in 0..3usize.pow(d as u32) {
            let mut w = 1.0;
            let mut idx = k;
            for i in 0..d {
                let (u, wi) = NODES[idx % 3];
                idx /= 3;
                y[i] = self.center[i] + u * self.half_width[i];
                w *= wi;
            }
            total += w * p_c_density(spec, &y);
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    /// `max empirical/p_c` over the region.
    pub upper_ratio: f64,
    /// `min empirical/p_{c⁻¹}` over the region.
    pub lower_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub config_hash: String,
    pub source: String,
    pub case: String,
    pub dim: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub samples: Option<usize>,
    pub bins: Vec<usize>,
    pub bin_width: Vec<f64>,
    pub region_cells: usize,
    pub min_region_count: Option<u64>,
    /// Envelope at the configured `(c, C)`.
    pub envelope: Envelope,
    /// Smallest `C` over the `c` grid and the `c` attaining it.
    pub fit: Option<Envelope>,
    /// The fitted `c` is an end point of the grid.
    pub fit_at_grid_edge: Option<bool>,
}

/// Ratios of the region against `p_c` and `p_{c⁻¹}` at base point `x0`, time `t`.
pub fn envelope_ratios(cells: &[Cell], case: CaseTag, c: f64, t: f64, x0: &[f64]) -> Result<(f64, f64)> {
    let up = KernelSpec::new(case, c, t, x0.to_vec())?;
    let lo = KernelSpec::new(case, 1.0 / c, t, x0.to_vec())?;
    let mut upper = 0.0f64;
    let mut lower = f64::INFINITY;
    for cell in cells {
        upper = upper.max(cell.empirical / cell.reference(&up));
        lower = lower.min(cell.empirical / cell.reference(&lo));
    }
    Ok((upper, lower))
}

fn envelope_at(cells: &[Cell], case: CaseTag, c: f64, big_c: f64, t: f64, x0: &[f64]) -> Result<Envelope> {
    let (upper_ratio, lower_ratio) = envelope_ratios(cells, case, c, t, x0)?;
    let holds = upper_ratio <= big_c && lower_ratio >= 1.0 / big_c;
    Ok(Envelope { c, big_c, upper_ratio, lower_ratio, holds })
}

/// For each `c` the smallest admissible `C = max(1, upper, 1/lower)`; returns
/// the `c` with the smallest `C` (the first one on ties) and its grid index.
pub fn fit_envelope(cells: &[Cell], case: CaseTag, c_grid: &[f64], t: f64, x0: &[f64]) -> Result<(Envelope, usize)> {
    let results: Vec<Result<Envelope>> = c_grid
        .par_iter()
        .map(|&c| {
            let (u, l) = envelope_ratios(cells, case, c, t, x0)?;
            Ok(Envelope { c, big_c: u.max(1.0 / l).max(1.0), upper_ratio: u, lower_ratio: l, holds: true })
        })
        .collect();
    let all: Vec<Envelope> = results.into_iter().collect::<Result<_>>()?;
    let (i, best) = all
        .iter()
        .enumerate()
        .fold(None::<(usize, &Envelope)>, |acc, (i, e)| match acc {
            Some((_, b)) if b.big_c <= e.big_c => acc,
            _ => Some((i, e)),
        })
        .ok_or_else(|| config_err!("c_grid is empty"))?;
    Ok((*best, i))
}

/// Log-spaced grid of 801 values on `[0.2, 5]`.
pub fn default_c_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.2f64.ln(), 5f64.ln(), 800);
    (0..=n).map(|k| (lo + (hi - lo) * k as f64 / n as f64).exp()).collect()
}

struct Histogram {
    cells: Vec<Cell>,
    bins: Vec<usize>,
    width: Vec<f64>,
    min_count: u64,
}

fn histogram_region(cfg: &ExperimentConfig) -> Result<Histogram> {
    let d = cfg.dim;
    let n = cfg.density_samples;
    if n < MIN_HISTOGRAM_SAMPLES {
        return Err(config_err!("histogram density checks need at least {MIN_HISTOGRAM_SAMPLES} samples, got {n}"));
    }
    let model = presets::build_model(cfg)?;
    let grid = presets::scheme_grid(cfg)?;
    let rng = RngSpec::new(cfg.seed, cfg.stream);
    let xs = simulate_samples(&model, &grid, &cfg.start(), &rng, 0..n as u64)?;

    let mut mean = vec![0.0; d];
    for row in xs.chunks_exact(d) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in xs.chunks_exact(d) {
        var.iter_mut().zip(row.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2));
    }
    let sd: Vec<f64> = var.iter().map(|s| (s / (n - 1) as f64).sqrt()).collect();
    if sd.iter().any(|s| !(*s > 0.0)) {
        return Err(AppError::Statistics("terminal samples have zero spread".into()));
    }

    let bins: Vec<usize> = sd.iter().map(|s| (2.0 * RANGE_SDS * s / scott_width(*s, n, d)).ceil() as usize).collect();
    let width: Vec<f64> = sd.iter().zip(&bins).map(|(s, b)| 2.0 * RANGE_SDS * s / *b as f64).collect();
    let lo: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m - RANGE_SDS * s).collect();
    let total: usize = bins.iter().product();
    let mut counts = vec![0u64; total];
    'samples: for row in xs.chunks_exact(d) {
        let mut flat = 0;
        for i in 0..d {
            let k = ((row[i] - lo[i]) / width[i]).floor();
            if !(k >= 0.0 && (k as usize) < bins[i]) {
                continue 'samples;
            }
            flat = flat * bins[i] + k as usize;
        }
        counts[flat] += 1;
    }

    let peak = *counts.iter().max().expect("at least one bin");
    let threshold = cfg.density_region_fraction * peak as f64;
    let volume: f64 = width.iter().product();
    let mut cells = Vec::new();
    for (flat, &count) in counts.iter().enumerate() {
        if (count as f64) < threshold || count == 0 {
            continue;
        }
        let mut idx = flat;
        let mut center = vec![0.0; d];
        for i in (0..d).rev() {
            center[i] = lo[i] + (idx % bins[i]) as f64 * width[i] + 0.5 * width[i];
            idx /= bins[i];
        }
        cells.push(Cell {
            center,
            half_width: width.iter().map(|w| 0.5 * w).collect(),
            count: Some(count),
            empirical: count as f64 / (n as f64 * volume),
        });
    }
    let min_count = cells.iter().filter_map(|c| c.count).min().unwrap_or(0);
    if min_count < cfg.density_min_count {
        return Err(AppError::Statistics(format!(
            "reported region has a bin with {min_count} samples, fewer than {}; raise density_samples",
            cfg.density_min_count
        )));
    }
    if cells.len() < MIN_REGION_CELLS {
        return Err(AppError::Statistics(format!("reported region has only {} bins", cells.len())));
    }
    Ok(Histogram { cells, bins, width, min_count })
}

fn ck_region(cfg: &ExperimentConfig) -> Result<(Vec<Cell>, Grid1D)> {
    if cfg.dim != 1 || cfg.case_tag() != CaseTag::NonDegenerate {
        return Err(config_err!("the ck density source needs a 1D non-degenerate model"));
    }
    let model = presets::build_model(cfg)?;
    let times = presets::scheme_grid(cfg)?;
    let x0 = cfg.start()[0];
    let grid = Grid1D::auto(&model, x0, cfg.horizon, cfg.grid_points, cfg.grid_sigmas)?;
    let table = chapman_kolmogorov_density(&model, &times, 0, cfg.steps, x0, &grid)?;
    let peak = table.sup_norm();
    let cells: Vec<Cell> = grid
        .points()
        .into_iter()
        .zip(&table.values)
        .filter(|(_, v)| **v >= cfg.density_region_fraction * peak)
        .map(|(x, v)| Cell { center: vec![x], half_width: vec![0.0], count: None, empirical: *v })
        .collect();
    if cells.len() < MIN_REGION_CELLS {
        return Err(AppError::Statistics(format!("reported region has only {} grid points", cells.len())));
    }
    Ok((cells, grid))
}

/// Region cells and report; the cells feed the CSV.
pub fn run_density_check(cfg: &ExperimentConfig) -> Result<(DensityReport, Vec<Cell>)> {
    if cfg.dim > 2 {
        return Err(config_err!("density checks need dim ≤ 2, got {}", cfg.dim));
    }
    let case = cfg.case_tag();
    let gauss = presets::gauss_params(cfg)?;
    let x0 = cfg.start();
    let (cells, samples, bins, width, min_count, source) = match cfg.density_source {
        DensitySource::Histogram => {
            let h = histogram_region(cfg)?;
            (h.cells, Some(cfg.density_samples), h.bins, h.width, Some(h.min_count), "histogram")
        }
        DensitySource::Ck => {
            let (cells, grid) = ck_region(cfg)?;
            (cells, None, vec![grid.len()], vec![grid.spacing()], None, "ck")
        }
    };
    let envelope = envelope_at(&cells, case, gauss.shape, gauss.domination, cfg.horizon, &x0)?;
    let (fit, edge) = if cfg.fit {
        let grid = cfg.c_grid.clone().unwrap_or_else(default_c_grid);
        let (e, i) = fit_envelope(&cells, case, &grid, cfg.horizon, &x0)?;
        (Some(e), Some(i == 0 || i + 1 == grid.len()))
    } else {
        (None, None)
    };
    let report = DensityReport {
        config_hash: cfg.hash(),
        source: source.into(),
        case: case_name(case),
        dim: cfg.dim,
        horizon: cfg.horizon,
        samples,
        bins,
        bin_width: width,
        region_cells: cells.len(),
        min_region_count: min_count,
        envelope,
        fit,
        fit_at_grid_edge: edge,
    };
    Ok((report, cells))
}

/// Writes `density.csv` (one row per region cell, references at the
/// configured `c`) and `density.json`.
pub fn write(cfg: &ExperimentConfig, report: &DensityReport, cells: &[Cell], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let d = report.dim;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
    header.extend(["count", "empirical", "p_c", "p_inv_c"].map(String::from));
    let up = KernelSpec::new(cfg.case_tag(), cfg.c, cfg.horizon, cfg.start())?;
    let lo = KernelSpec::new(cfg.case_tag(), 1.0 / cfg.c, cfg.horizon, cfg.start())?;
    let csv = out_dir.join("density.csv");
    let mut w = CsvWriter::create(&csv, &report.config_hash, &header)?;
    for cell in cells {
        let mut row = cell.center.clone();
        row.push(cell.count.map_or(f64::NAN, |c| c as f64));
        row.extend([cell.empirical, cell.reference(&up), cell.reference(&lo)]);
        w.row(&row)?;
    }
    w.finish()?;
    let json = out_dir.join("density.json");
    write_json(&json, report)?;
    Ok(vec![csv, json])
}
