//! One module per CLI subcommand. Each `run_*` computes a report; each
//! `write` stores it under the output directory and returns the paths.

pub mod bounds;
pub mod concentration;
pub mod control;
pub mod density;
pub mod parametrix;
pub mod simulate;
