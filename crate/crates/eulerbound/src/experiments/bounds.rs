//! Constants of the upper and lower deviation bounds and confidence radii.

use std::path::{Path, PathBuf};

use serde::Serialize;

use eulerbound_core::concentration::UpperBound;
use eulerbound_core::model::case_name;
use eulerbound_core::CaseTag;

use crate::config::{CaseName, ExperimentConfig};
use crate::error::Result;
use crate::experiments::concentration::{lower_constants, LowerReport};
use crate::io::{write_json, CsvWriter};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusRow {
    pub epsilon: f64,
    pub radius: f64,
    /// `radius + δ`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseBounds {
    pub case: String,
    pub alpha_t: f64,
    pub delta_bias: f64,
    pub radii: Vec<RadiusRow>,
    pub lower: Option<LowerReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub config_hash: String,
    pub dim: usize,
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "M")]
    pub samples: usize,
    /// Case (a), then case (b) when `dim` is even.
    pub cases: Vec<CaseBounds>,
}

/// Lower-bound constants are included when `lower` is set; they need a
/// growth spec (`rho0`, `beta`).
pub fn run_bound_table(cfg: &ExperimentConfig) -> Result<BoundTable> {
    let gauss = presets::gauss_params(cfg)?;
    let mut cases = vec![CaseTag::NonDegenerate];
    if cfg.dim.is_multiple_of(2) {
        cases.push(CaseTag::Kinetic);
    }
    let mut out = Vec::new();
    for case in cases {
        let ub = UpperBound::new(case, gauss, cfg.horizon)?;
        let radii = cfg
            .epsilons
            .iter()
            .map(|&e| {
                let r = ub.radius(e, cfg.samples)?;
                Ok(RadiusRow { epsilon: e, radius: r.radius, total: r.total })
            })
            .collect::<Result<Vec<_>>>()?;
        let lower = if cfg.lower {
            let mut c = cfg.clone();
            c.case = match case {
                CaseTag::NonDegenerate => CaseName::NonDegenerate,
                CaseTag::Kinetic => CaseName::Kinetic,
            };
            Some(lower_constants(&c, ub.alpha_t)?)
        } else {
            None
        };
        out.push(CaseBounds { case: case_name(case), alpha_t: ub.alpha_t, delta_bias: ub.delta_bias, radii, lower });
    }
    Ok(BoundTable {
        config_hash: cfg.hash(),
        dim: cfg.dim,
        c: gauss.shape,
        big_c: gauss.domination,
        horizon: cfg.horizon,
        samples: cfg.samples,
        cases: out,
    })
}

/// Writes `bounds.csv` (one row per case and ε) and `bounds.json`.
pub fn write(table: &BoundTable, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let csv = out_dir.join("bounds.csv");
    let header = ["case", "epsilon", "alpha_t", "delta", "radius", "total"].map(String::from);
    let mut w = CsvWriter::create(&csv, &table.config_hash, &header)?;
    for case in &table.cases {
        for r in &case.radii {
            w.labeled_row(&case.case, &[r.epsilon, case.alpha_t, case.delta_bias, r.radius, r.total])?;
        }
    }
    w.finish()?;
    let json = out_dir.join("bounds.json");
    write_json(&json, table)?;
    Ok(vec![csv, json])
}
