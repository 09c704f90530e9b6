//! Euler discretization schemes for non-degenerate and kinetic diffusions,
//! their Gaussian reference kernels, and the non-asymptotic Gaussian
//! concentration constants that bound the Monte Carlo error of the scheme.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything here is pure computation; file formats, parallel batch
//! drivers and the command line live in the `eulerbound` companion crate.
//!
//! Module map:
//!
//! - [`model`]: SDE models, time grids, assumption checks.
//! - [`simulate`]: one-step samplers, terminal batches, Monte Carlo deviation.
//! - [`gaussianref`]: the Gaussian reference kernels `p_c`, the kinetic metric,
//!   the Gibbs potential and its spectrum, radial tail integrals.
//! - [`concentration`]: concentration constants, tail bounds, LSI/W1/entropy.
//! - [`control`]: the kinetic controllability problem and its geodesics.
//! - [`parametrix`]: the 1D discrete parametrix density engine.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod concentration;
pub mod control;
mod error;
pub mod gaussianref;
pub mod linalg;
pub mod model;
pub mod parametrix;
pub mod quadrature;
pub mod simulate;
pub mod sphere;

pub use error::{Error, Result};
pub use model::{CaseTag, GaussParams, GrowthSpec, SchemeGrid, SdeModel};
pub use simulate::{RngSpec, TerminalBatch};
