//! Experiment drivers, file formats and the `eulerbound` command line on top
//! of `eulerbound-core`.
//!
//! An experiment is a flat JSON [`config::ExperimentConfig`] plus a
//! subcommand. Outputs are CSV files (first line `# config-hash: <sha256>`,
//! then a header) and pretty JSON reports, identical for any thread count.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod parallel;
pub mod presets;
pub mod stats;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use error::{AppError, Result};

/// The six subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Bounds,
    Concentration,
    DensityCheck,
    Parametrix,
    ControlGeodesic,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// One-line human summary.
    pub summary: String,
}

/// Runs `command` in a pool of `cfg.threads` workers and writes its outputs
/// to `cfg.out_dir`.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    parallel::with_pool(cfg.threads, || run_in_pool(command, cfg))?
}

fn run_in_pool(command: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    use experiments::*;
    let dir = &cfg.out_dir;
    Ok(match command {
        Command::Simulate => {
            let (s, batch) = simulate::run_simulation(cfg)?;
            let files = simulate::write(cfg, &s, &batch, dir)?;
            RunOutcome { files, summary: format!("{} samples, mean {:?}", s.count, s.mean) }
        }
        Command::Bounds => {
            let t = bounds::run_bound_table(cfg)?;
            let files = bounds::write(&t, dir)?;
            let first = &t.cases[0];
            RunOutcome { files, summary: format!("alpha(T) = {}, delta = {}", first.alpha_t, first.delta_bias) }
        }
        Command::Concentration => {
            let r = concentration::run_concentration_experiment(cfg)?;
            let files = concentration::write(&r, dir)?;
            let failing = r.rows.iter().filter(|row| !row.holds).count();
            let summary = format!(
                "{} radii, {} with Wilson limit above the bound; reference mean {} ({})",
                r.rows.len(),
                failing,
                r.reference.value,
                r.reference.source
            );
            RunOutcome { files, summary }
        }
        Command::DensityCheck => {
            let (r, cells) = density::run_density_check(cfg)?;
            let files = density::write(cfg, &r, &cells, dir)?;
            let summary = match r.fit {
                Some(f) => format!("envelope holds: {}; fitted c = {}, C = {}", r.envelope.holds, f.c, f.big_c),
                None => format!("envelope holds: {}", r.envelope.holds),
            };
            RunOutcome { files, summary }
        }
        Command::Parametrix => {
            let out = parametrix::run_parametrix(cfg)?;
            let files = parametrix::write(&out, dir)?;
            let summary = format!(
                "sup relative error vs CK {:e}; term norms {:?}",
                out.report.sup_relative_error, out.report.term_norms
            );
            RunOutcome { files, summary }
        }
        Command::ControlGeodesic => {
            let out = control::run_control_geodesic(cfg)?;
            let files = control::write(&out, dir)?;
            let summary = format!(
                "energy {} (2·metric {}), endpoint error {:e}",
                out.report.energy, out.report.twice_metric, out.report.endpoint_error
            );
            RunOutcome { files, summary }
        }
    })
}
