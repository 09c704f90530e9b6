//! One-step samplers of the two Euler schemes, terminal batches and the
//! Monte Carlo deviation.
//!
//! Every sample draws its Gaussians from its own ChaCha8 substream keyed by
//! `(master_seed, stream_id, sample_index)`, so a batch is the same whatever
//! order or thread its samples are produced in.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{CaseTag, SchemeGrid, SdeModel};

/// Generator used for every substream.
pub type SubstreamRng = ChaCha8Rng;

/// Seed material of a family of reproducible streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Generator of sample `index`; the ChaCha key is
    /// `master_seed ‖ stream_id ‖ index ‖ 0` in little-endian words.
    pub fn substream(&self, index: u64) -> SubstreamRng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        seed[16..24].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(seed)
    }

    /// The same master seed with another stream id.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self { stream_id, ..*self }
    }
}

/// Fills `out` with independent standard normals.
pub fn fill_normals(rng: &mut SubstreamRng, out: &mut [f64]) {
    for v in out {
        *v = StandardNormal.sample(rng);
    }
}

/// Number of standard normals one step consumes: `d′` in case (a), `2d′` in case (b).
pub fn draws_per_step(model: &SdeModel) -> usize {
    match model.case() {
        CaseTag::NonDegenerate => model.noise_dim(),
        CaseTag::Kinetic => 2 * model.noise_dim(),
    }
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { sample: None, detail: alloc::format!("{what} produced {x:?}") })
    }
}

/// Lower-triangular factor of the kinetic one-step covariance
/// `[[aΔ, aΔ²/2], [aΔ²/2, aΔ³/3]]`, assembled as `L_time ⊗ chol(a)` with
/// `L_time = [[√Δ, 0], [Δ^{3/2}/2, Δ^{3/2}/(2√3)]]`.
pub fn kinetic_covariance_factor(a: &Matrix, delta: f64) -> Result<Matrix> {
    if !(delta > 0.0) {
        bail!(InvalidArgument, "time step must be positive, got {delta}");
    }
    let la = linalg::cholesky(a)?;
    let n = a.rows();
    let (l00, l10, l11) = time_factor(delta);
    let mut out = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..=i {
            let v = la[(i, j)];
            out[(i, j)] = l00 * v;
            out[(n + i, j)] = l10 * v;
            out[(n + i, n + j)] = l11 * v;
        }
    }
    Ok(out)
}

/// Kinetic one-step covariance, for checking factors.
pub fn kinetic_covariance(a: &Matrix, delta: f64) -> Matrix {
    let n = a.rows();
    let q = [delta, delta * delta / 2.0, delta * delta / 2.0, delta * delta * delta / 3.0];
    let mut out = Matrix::zeros(2 * n, 2 * n);
    for bi in 0..2 {
        for bj in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    out[(bi * n + i, bj * n + j)] = q[2 * bi + bj] * a[(i, j)];
                }
            }
        }
    }
    out
}

fn time_factor(delta: f64) -> (f64, f64, f64) {
    let s = delta.sqrt();
    let h = delta * s;
    (s, 0.5 * h, h / (2.0 * 3f64.sqrt()))
}

/// One step of the non-degenerate scheme: `x + b(t, x)Δ + σ(t, x)√Δ g`.
pub fn euler_step_a(model: &SdeModel, t: f64, x: &[f64], delta: f64, gaussian: &[f64]) -> Result<Vec<f64>> {
    if model.case() != CaseTag::NonDegenerate {
        bail!(InvalidArgument, "euler_step_a needs a non-degenerate model");
    }
    let mut stepper = Stepper::new(model, delta)?;
    let mut y = x.to_vec();
    stepper.step(t, &mut y, gaussian)?;
    Ok(y)
}

/// One step of the kinetic scheme on `x = (v, z)`:
/// `v' = v + b₁Δ + ΔW`, `z' = z + vΔ + b₁Δ²/2 + ∫ΔW`, sampled exactly from the
/// joint Gaussian law through [`kinetic_covariance_factor`].
pub fn euler_step_b(model: &SdeModel, t: f64, x: &[f64], delta: f64, gaussian: &[f64]) -> Result<Vec<f64>> {
    if model.case() != CaseTag::Kinetic {
        bail!(InvalidArgument, "euler_step_b needs a kinetic model");
    }
    let mut stepper = Stepper::new(model, delta)?;
    let mut y = x.to_vec();
    stepper.step(t, &mut y, gaussian)?;
    Ok(y)
}

/// Reusable one-step sampler; holds the scratch buffers of a sample path.
pub struct Stepper<'a> {
    model: &'a SdeModel,
    delta: f64,
    drift: Vec<f64>,
    sigma: Vec<f64>,
    noise: Vec<f64>,
    // Case (b): Cholesky factor of a, cached when the coefficients are constant.
    factor: Vec<f64>,
    factor_ready: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a SdeModel, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            bail!(InvalidArgument, "time step must be positive, got {delta}");
        }
        let n = model.noise_dim();
        Ok(Self {
            model,
            delta,
            drift: vec![0.0; n],
            sigma: vec![0.0; n * n],
            noise: vec![0.0; n],
            factor: vec![0.0; n * n],
            factor_ready: false,
        })
    }

    /// Advances `x` in place over one step starting at time `t`.
    pub fn step(&mut self, t: f64, x: &mut [f64], gaussian: &[f64]) -> Result<()> {
        let m = self.model;
        let n = m.noise_dim();
        if x.len() != m.dim() {
            bail!(InvalidArgument, "state has dimension {}, model has {}", x.len(), m.dim());
        }
        if gaussian.len() != draws_per_step(m) {
            bail!(InvalidArgument, "step needs {} normal draws, got {}", draws_per_step(m), gaussian.len());
        }
        let dt = self.delta;
        m.drift_into(t, x, &mut self.drift);
        check_finite(&self.drift, "drift")?;
        match m.case() {
            CaseTag::NonDegenerate => {
                m.sigma_into(t, x, &mut self.sigma);
                check_finite(&self.sigma, "sigma")?;
                linalg::mul_vec_into(&self.sigma, n, gaussian, &mut self.noise);
                let s = dt.sqrt();
                for i in 0..n {
                    x[i] += self.drift[i] * dt + s * self.noise[i];
                }
            }
            CaseTag::Kinetic => {
                if !(self.factor_ready && m.is_constant()) {
                    m.sigma_into(t, x, &mut self.sigma);
                    check_finite(&self.sigma, "sigma")?;
                    for i in 0..n {
                        for j in 0..n {
                            self.factor[i * n + j] = linalg::dot(&self.sigma[i * n..(i + 1) * n], &self.sigma[j * n..(j + 1) * n]);
                        }
                    }
                    linalg::cholesky_in_place(&mut self.factor, n)?;
                    self.factor_ready = true;
                }
                let (l00, l10, l11) = time_factor(dt);
                let (g1, g2) = gaussian.split_at(n);
                let (v, z) = x.split_at_mut(n);
                for i in 0..n {
                    let row = &self.factor[i * n..i * n + i + 1];
                    let a1 = linalg::dot(row, &g1[..=i]);
                    let a2 = linalg::dot(row, &g2[..=i]);
                    let b = self.drift[i];
                    z[i] += v[i] * dt + b * dt * dt / 2.0 + l10 * a1 + l11 * a2;
                    v[i] += b * dt + l00 * a1;
                }
            }
        }
        check_finite(x, "step")
    }
}

/// `N` steps of the scheme from `x0` with the Gaussians of substream `index`.
pub fn simulate_one(model: &SdeModel, grid: &SchemeGrid, x0: &[f64], rng: &RngSpec, index: u64) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    simulate_into(model, grid, rng, index, &mut x)?;
    Ok(x)
}

fn simulate_into(model: &SdeModel, grid: &SchemeGrid, rng: &RngSpec, index: u64, x: &mut [f64]) -> Result<()> {
    let mut stepper = Stepper::new(model, grid.delta())?;
    let mut g = vec![0.0; draws_per_step(model)];
    let mut r = rng.substream(index);
    for i in 0..grid.steps() {
        fill_normals(&mut r, &mut g);
        stepper.step(grid.time(i), x, &g).map_err(|e| match e {
            Error::NonFinite { detail, .. } => Error::NonFinite { sample: Some(index), detail },
            other => other,
        })?;
    }
    Ok(())
}

/// Terminal values of samples `range`, written row by row into `out`.
pub fn simulate_range(
    model: &SdeModel,
    grid: &SchemeGrid,
    x0: &[f64],
    rng: &RngSpec,
    range: Range<u64>,
    out: &mut [f64],
) -> Result<()> {
    let d = model.dim();
    if x0.len() != d {
        bail!(InvalidArgument, "start point has dimension {}, model has {d}", x0.len());
    }
    if out.len() as u64 != (range.end - range.start) * d as u64 {
        bail!(InvalidArgument, "output buffer holds {} values, range needs {}", out.len(), (range.end - range.start) * d as u64);
    }
    for (row, index) in out.chunks_exact_mut(d).zip(range) {
        row.copy_from_slice(x0);
        simulate_into(model, grid, rng, index, row)?;
    }
    Ok(())
}

/// `M` independent terminal values `X_T^Δ` from `x0`.
pub fn simulate_terminal(model: &SdeModel, grid: &SchemeGrid, x0: &[f64], rng: &RngSpec, m: usize) -> Result<TerminalBatch> {
    if m == 0 {
        bail!(InvalidArgument, "at least one sample is required");
    }
    let mut samples = vec![0.0; m * model.dim()];
    simulate_range(model, grid, x0, rng, 0..m as u64, &mut samples)?;
    TerminalBatch::new(model.case(), *grid, x0.to_vec(), samples)
}

/// `M` terminal points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalBatch {
    pub case: CaseTag,
    pub grid: SchemeGrid,
    pub start: Vec<f64>,
    samples: Vec<f64>,
}

impl TerminalBatch {
    pub fn new(case: CaseTag, grid: SchemeGrid, start: Vec<f64>, samples: Vec<f64>) -> Result<Self> {
        let d = start.len();
        if d == 0 || samples.is_empty() || !samples.len().is_multiple_of(d) {
            bail!(InvalidArgument, "{} values do not form points of dimension {d}", samples.len());
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { sample: Some((i / d) as u64), detail: "terminal value".into() });
        }
        Ok(Self { case, grid, start, samples })
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    /// Number of samples `M`.
    pub fn len(&self) -> usize {
        self.samples.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.samples[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.samples.chunks_exact(self.dim())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for s in self.iter() {
            m.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> Matrix {
        let d = self.dim();
        let mean = self.mean();
        let mut c = Matrix::zeros(d, d);
        for s in self.iter() {
            for i in 0..d {
                for j in 0..d {
                    c[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]);
                }
            }
        }
        let denom = (self.len().max(2) - 1) as f64;
        c.as_mut_slice().iter_mut().for_each(|v| *v /= denom);
        c
    }
}

/// `E_MC = (1/M) Σ f(X_i) − reference_mean`.
pub fn mc_deviation(batch: &TerminalBatch, f: impl Fn(&[f64]) -> f64, reference_mean: f64) -> Result<f64> {
    if !reference_mean.is_finite() {
        bail!(InvalidArgument, "reference mean must be finite, got {reference_mean}");
    }
    let mut sum = 0.0;
    for (i, s) in batch.iter().enumerate() {
        let v = f(s);
        if !v.is_finite() {
            return Err(Error::NonFinite { sample: Some(i as u64), detail: alloc::format!("f = {v}") });
        }
        sum += v;
    }
    Ok(sum / batch.len() as f64 - reference_mean)
}
