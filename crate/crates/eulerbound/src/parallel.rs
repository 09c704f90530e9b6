//! Work split into fixed blocks of sample indices.
//!
//! Block boundaries depend only on the sample count, never on the thread
//! count, and per-block results are combined in block order, so every
//! reduction is identical at any `--threads`.

use std::ops::Range;

use rayon::prelude::*;

use eulerbound_core::simulate::simulate_range;
use eulerbound_core::{RngSpec, SchemeGrid, SdeModel};

use crate::error::{config_err, Result};

/// Samples per block.
pub const BLOCK: u64 = 4096;

/// Runs `f` inside a pool of `threads` workers (rayon's default when `None`).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| config_err!("cannot start {threads:?} worker threads: {e}"))?;
    Ok(pool.install(f))
}

/// `f` over consecutive index blocks of `range`, results in block order.
/// The reported error is the one of the first failing block.
pub fn map_blocks<T, F>(range: Range<u64>, block: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
{
    assert!(block > 0, "block size must be positive");
    let n_blocks = (range.end - range.start).div_ceil(block);
    let results: Vec<Result<T>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = range.start + b * block;
            f(lo..(lo + block).min(range.end))
        })
        .collect();
    results.into_iter().collect()
}

/// Terminal values of samples `range`, row-major.
pub fn simulate_samples(
    model: &SdeModel,
    grid: &SchemeGrid,
    x0: &[f64],
    rng: &RngSpec,
    range: Range<u64>,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let chunks = map_blocks(range, BLOCK, |r| {
        let mut out = vec![0.0; (r.end - r.start) as usize * d];
        simulate_range(model, grid, x0, rng, r, &mut out)?;
        Ok(out)
    })?;
    Ok(chunks.concat())
}

/// Sum and sum of squares of `f(X_T)` over samples `range`.
pub fn functional_moments(
    model: &SdeModel,
    grid: &SchemeGrid,
    x0: &[f64],
    rng: &RngSpec,
    range: Range<u64>,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let d = model.dim();
    let parts = map_blocks(range, BLOCK, |r| {
        let mut out = vec![0.0; (r.end - r.start) as usize * d];
        simulate_range(model, grid, x0, rng, r.clone(), &mut out)?;
        let (mut s, mut s2) = (0.0, 0.0);
        for (row, i) in out.chunks_exact(d).zip(r) {
            let v = f(row);
            if !v.is_finite() {
                return Err(eulerbound_core::Error::NonFinite { sample: Some(i), detail: format!("f = {v}") }.into());
            }
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    })?;
    Ok(parts.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d)))
}
