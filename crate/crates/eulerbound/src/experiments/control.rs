//! Minimal-energy path of the kinetic control problem.

use std::path::{Path, PathBuf};

use serde::Serialize;

use eulerbound_core::control::{energy, energy_closed_form, geodesic, optimal_control, ControlProblem, Trajectory};
use eulerbound_core::gaussianref::kinetic_metric;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{write_json, CsvWriter};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicReport {
    pub config_hash: String,
    pub t: f64,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    /// `∫|φ_s|² ds` by quadrature.
    pub energy: f64,
    pub energy_closed_form: f64,
    /// `2 d²_t(x, x′)`.
    pub twice_metric: f64,
    pub endpoint_error: f64,
    pub steps: usize,
}

pub struct GeodesicOutput {
    pub report: GeodesicReport,
    pub problem: ControlProblem,
    pub trajectory: Trajectory,
}

/// Uses `x0` and `x_prime` as endpoints and the horizon as `t`.
pub fn run_control_geodesic(cfg: &ExperimentConfig) -> Result<GeodesicOutput> {
    let problem = ControlProblem::new(cfg.horizon, cfg.start(), cfg.target())?;
    let trajectory = geodesic(&problem, cfg.geodesic_steps)?;
    let report = GeodesicReport {
        config_hash: cfg.hash(),
        t: problem.t,
        x: problem.x.clone(),
        x_prime: problem.x_prime.clone(),
        energy: energy(&problem)?,
        energy_closed_form: energy_closed_form(&problem),
        twice_metric: 2.0 * kinetic_metric(problem.t, &problem.x, &problem.x_prime, problem.d_prime),
        endpoint_error: trajectory.endpoint_error,
        steps: cfg.geodesic_steps,
    };
    Ok(GeodesicOutput { report, problem, trajectory })
}

/// Writes `geodesic.csv` (`s, v_i, z_i, phi_i`) and `geodesic.json`.
pub fn write(out: &GeodesicOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let n = out.problem.d_prime;
    let mut header = vec!["s".to_string()];
    header.extend((1..=n).map(|i| format!("v_{i}")));
    header.extend((1..=n).map(|i| format!("z_{i}")));
    header.extend((1..=n).map(|i| format!("phi_{i}")));
    let csv = out_dir.join("geodesic.csv");
    let mut w = CsvWriter::create(&csv, &out.report.config_hash, &header)?;
    for (s, state) in out.trajectory.times.iter().zip(&out.trajectory.states) {
        let mut row = vec![*s];
        row.extend(state);
        row.extend(optimal_control(&out.problem, *s));
        w.row(&row)?;
    }
    w.finish()?;
    let json = out_dir.join("geodesic.json");
    write_json(&json, &out.report)?;
    Ok(vec![csv, json])
}
