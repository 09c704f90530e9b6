//! Discrete parametrix expansion of the one-dimensional non-degenerate Euler
//! scheme density on a uniform spatial grid.
//!
//! `p̃` is the density of the scheme with coefficients frozen at the terminal
//! point `x′`; the kernel is
//! `H(t_j, t_j′, x, x′) = Δ⁻¹ ∫ [p − p̃](t_j, t_{j+1}, x, u) p̃(t_{j+1}, t_j′, u, x′) du`
//! (a pointwise difference when `j′ = j + 1`), and
//! `p(t_j, t_j′) = Σ_{r=0}^{j′−j} p̃ ⊗_Δ H^{(r)}` with
//! `(g ⊗_Δ f)(t_j, t_j′, x, x′) = Σ_{k=0}^{j′−j−1} Δ ∫ g(t_j, t_{j+k}, x, u) f(t_{j+k}, t_j′, u, x′) du`.
//!
//! Spatial integrals use the trapezoidal rule on the grid. Time slices of
//! `g` at `k = 0` are the Dirac mass at `x` for `p̃` and zero for `r ≥ 1`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Error, Result};
use crate::gaussianref::{self, KernelSpec};
use crate::model::{CaseTag, GaussParams, SchemeGrid, SdeModel};
use crate::quadrature;

/// Uniform grid `lo = y_0 < … < y_{n−1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            bail!(InvalidArgument, "grid bounds must satisfy lo < hi, got [{lo}, {hi}]");
        }
        if n_points < 3 {
            bail!(InvalidArgument, "grid needs at least 3 points, got {n_points}");
        }
        Ok(Self { lo, hi, n: n_points })
    }

    /// Grid centred at `x` wide enough for the scheme over `horizon`:
    /// half-width `sigmas·√(λ0·T) + L0·T`, using `a ≤ λ0` and `|b| ≤ L0`.
    pub fn auto(model: &SdeModel, x: f64, horizon: f64, n_points: usize, sigmas: f64) -> Result<Self> {
        let k = model.constants();
        let half = sigmas * (k.lambda0 * horizon).sqrt() + k.l0 * horizon;
        Self::new(x - half, x + half, n_points)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        quadrature::trapezoid_weights(self.n, self.spacing())
    }

    /// Trapezoidal integral of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n, "values do not match the grid");
        let h = self.spacing();
        let inner: f64 = values[1..self.n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }
}

/// Values on a grid at a pair of time indices: a vector over `x′` (fixed
/// `x`) or a row-major matrix over `(x, x′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub grid: Grid1D,
    pub j: usize,
    pub j_prime: usize,
    /// Starting point of a vector table; `None` for a matrix table.
    pub x: Option<f64>,
    pub values: Vec<f64>,
    /// Kernel tables may change sign and skip normalization checks.
    pub signed: bool,
}

impl DensityTable {
    pub fn vector(grid: Grid1D, j: usize, j_prime: usize, x: f64, values: Vec<f64>, signed: bool) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(InvalidArgument, "table has {} values for a {}-point grid", values.len(), grid.len());
        }
        Ok(Self { grid, j, j_prime, x: Some(x), values, signed })
    }

    pub fn matrix(grid: Grid1D, j: usize, j_prime: usize, values: Vec<f64>, signed: bool) -> Result<Self> {
        if values.len() != grid.len() * grid.len() {
            bail!(InvalidArgument, "matrix table has {} values for a {}-point grid", values.len(), grid.len());
        }
        Ok(Self { grid, j, j_prime, x: None, values, signed })
    }

    pub fn is_matrix(&self) -> bool {
        self.x.is_none()
    }

    /// Trapezoidal mass of a vector table.
    pub fn mass(&self) -> f64 {
        assert!(!self.is_matrix(), "mass of a matrix table is per row");
        self.grid.integrate(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Checks `mass = 1 ± tol` and `values ≥ −tol`; signed tables are rejected.
    pub fn check_probability(&self, tol: f64) -> Result<()> {
        if self.signed {
            bail!(InvalidArgument, "signed kernel tables are not probability densities");
        }
        if let Some(v) = self.values.iter().find(|v| **v < -tol) {
            bail!(Tolerance, "density value {v} is negative");
        }
        let rows: Vec<&[f64]> = if self.is_matrix() { self.values.chunks(self.grid.len()).collect() } else { vec![&self.values] };
        for row in rows {
            let m = self.grid.integrate(row);
            if (m - 1.0).abs() > tol {
                bail!(Truncation, "table mass {m} differs from 1 by more than {tol:e}");
            }
        }
        Ok(())
    }
}

fn check_1d(model: &SdeModel) -> Result<()> {
    if model.case() != CaseTag::NonDegenerate || model.dim() != 1 {
        bail!(InvalidArgument, "the parametrix engine handles 1D non-degenerate models only");
    }
    Ok(())
}

fn check_indices(times: &SchemeGrid, j: usize, j_prime: usize) -> Result<()> {
    if !(j < j_prime && j_prime <= times.steps()) {
        bail!(InvalidArgument, "time indices must satisfy 0 ≤ j < j′ ≤ N = {}, got ({j}, {j_prime})", times.steps());
    }
    Ok(())
}

#[inline]
fn gauss(y: f64, mean: f64, var: f64) -> f64 {
    let z = y - mean;
    (-0.5 * z * z / var).exp() / (2.0 * PI * var).sqrt()
}

/// `(b(t, y), a(t, y))` of a 1D model.
fn coeffs(model: &SdeModel, t: f64, y: f64) -> Result<(f64, f64)> {
    let mut b = [0.0];
    let mut s = [0.0];
    model.drift_into(t, &[y], &mut b);
    model.sigma_into(t, &[y], &mut s);
    let a = s[0] * s[0];
    if !(b[0].is_finite() && a.is_finite() && a > 0.0) {
        return Err(Error::InvalidModel(alloc::format!("coefficients b = {}, a = {a} at t = {t}, x = {y}", b[0])));
    }
    Ok((b[0], a))
}

/// Mean shift and variance of the scheme frozen at `y` over steps `j..j′`.
fn frozen_moments(model: &SdeModel, times: &SchemeGrid, j: usize, j_prime: usize, y: f64) -> Result<(f64, f64)> {
    let dt = times.delta();
    let (mut shift, mut var) = (0.0, 0.0);
    for i in j..j_prime {
        let (b, a) = coeffs(model, times.time(i), y)?;
        shift += b * dt;
        var += a * dt;
    }
    Ok((shift, var))
}

/// `p̃^{x′}(t_j, t_j′, x, x′)`: Gaussian with mean `x + Σ b(t_i, x′)Δ` and
/// variance `Σ a(t_i, x′)Δ`.
pub fn frozen_density(model: &SdeModel, times: &SchemeGrid, j: usize, j_prime: usize, x: f64, x_prime: f64) -> Result<f64> {
    check_1d(model)?;
    check_indices(times, j, j_prime)?;
    let (shift, var) = frozen_moments(model, times, j, j_prime, x_prime)?;
    Ok(gauss(x_prime, x + shift, var))
}

/// `p(t_j, t_{j+1}, x, x′)`: `N(x + b(t_j, x)Δ, a(t_j, x)Δ)` at `x′`.
pub fn one_step_density(model: &SdeModel, times: &SchemeGrid, j: usize, x: f64, x_prime: f64) -> Result<f64> {
    check_1d(model)?;
    check_indices(times, j, j + 1)?;
    let dt = times.delta();
    let (b, a) = coeffs(model, times.time(j), x)?;
    Ok(gauss(x_prime, x + b * dt, a * dt))
}

/// Largest mass a grid may lose from a one-step density.
pub const KERNEL_TRUNCATION_TOL: f64 = 1e-6;

/// `H^Δ(t_j, t_j′, x, x′)`; trapezoidal quadrature of the integral form when `j′ > j + 1`.
pub fn kernel_h(
    model: &SdeModel,
    times: &SchemeGrid,
    j: usize,
    j_prime: usize,
    x: f64,
    x_prime: f64,
    grid: &Grid1D,
) -> Result<f64> {
    check_1d(model)?;
    check_indices(times, j, j_prime)?;
    let dt = times.delta();
    let t = times.time(j);
    let (b, a) = coeffs(model, t, x)?;
    let (bf, af) = coeffs(model, t, x_prime)?;
    if j_prime == j + 1 {
        return Ok((gauss(x_prime, x + b * dt, a * dt) - gauss(x_prime, x + bf * dt, af * dt)) / dt);
    }
    let (shift, var) = frozen_moments(model, times, j + 1, j_prime, x_prime)?;
    let w = grid.weights();
    let (mut mass_p, mut mass_f, mut acc) = (0.0, 0.0, 0.0);
    for (k, u) in grid.points().into_iter().enumerate() {
        let p = gauss(u, x + b * dt, a * dt);
        let pf = gauss(u, x + bf * dt, af * dt);
        mass_p += w[k] * p;
        mass_f += w[k] * pf;
        acc += w[k] * (p - pf) * gauss(x_prime, u + shift, var);
    }
    let lost = (1.0 - mass_p).abs().max((1.0 - mass_f).abs());
    if lost > KERNEL_TRUNCATION_TOL {
        bail!(Truncation, "grid [{}, {}] loses mass {lost:e} of the one-step law from x = {x}", grid.lo(), grid.hi());
    }
    Ok(acc / dt)
}

/// A time slice `g(t_j, t_{j+k}, x, ·)` of the left factor of `⊗_Δ`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSlice {
    /// Dirac mass at the starting point.
    Dirac,
    Zero,
    Table(DensityTable),
}

/// `(g ⊗_Δ f)(t_j, t_j′, x, ·)` for slices `g[k] = g(t_j, t_{j+k}, x, ·)`,
/// `k = 0..j′−j`, and `f(l, u, x′) = f(t_l, t_j′, u, x′)`.
pub fn discrete_convolution(
    g: &[TimeSlice],
    f: &dyn Fn(usize, f64, f64) -> f64,
    j: usize,
    j_prime: usize,
    x: f64,
    times: &SchemeGrid,
    grid: &Grid1D,
) -> Result<DensityTable> {
    check_indices(times, j, j_prime)?;
    if g.len() != j_prime - j {
        bail!(InvalidArgument, "need {} time slices, got {}", j_prime - j, g.len());
    }
    let dt = times.delta();
    let pts = grid.points();
    let w = grid.weights();
    let mut out = vec![0.0; grid.len()];
    let mut signed = false;
    for (k, slice) in g.iter().enumerate() {
        let l = j + k;
        match slice {
            TimeSlice::Zero => {}
            TimeSlice::Dirac => {
                for (o, &xp) in out.iter_mut().zip(&pts) {
                    *o += dt * f(l, x, xp);
                }
            }
            TimeSlice::Table(tab) => {
                if tab.grid != *grid || tab.is_matrix() {
                    bail!(InvalidArgument, "slice {k} is not a vector table on the convolution grid");
                }
                signed |= tab.signed;
                for (o, &xp) in out.iter_mut().zip(&pts) {
                    let s: f64 = pts.iter().zip(&w).zip(&tab.values).map(|((&u, &wu), &gv)| wu * gv * f(l, u, xp)).sum();
                    *o += dt * s;
                }
            }
        }
    }
    signed |= out.iter().any(|v| *v < 0.0);
    DensityTable::vector(*grid, j, j_prime, x, out, signed)
}

/// Truncated parametrix series and the sup-norm of each term.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixSeries {
    pub density: DensityTable,
    /// `p̃ ⊗_Δ H^{(r)}(t_j, t_j′, x, ·)` for `r = 0..=r_max`.
    pub terms: Vec<DensityTable>,
    pub term_norms: Vec<f64>,
    /// Set when some term with `r ≥ 2` fails to be smaller than its predecessor.
    pub divergence_warning: Option<String>,
}

/// Negative series values beyond this fraction of the sup norm mark the
/// density table as signed.
pub const SERIES_NEGATIVE_TOL: f64 = 1e-10;

/// Entries below this fraction of a Gaussian row's peak are dropped from the
/// banded sums (`e^{−69}`, far below double precision relative to the peak).
const BAND_CUTOFF: f64 = 1e-30;

/// Index range of `row` holding values above `BAND_CUTOFF` times its maximum.
fn band(row: &[f64]) -> (usize, usize) {
    let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return (0, 0);
    }
    let cut = peak * BAND_CUTOFF;
    let lo = row.iter().position(|v| v.abs() > cut).unwrap_or(0);
    let hi = row.iter().rposition(|v| v.abs() > cut).map_or(0, |i| i + 1);
    (lo, hi)
}

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One-step transition matrix `P[u][w] = p(t_l, t_{l+1}, u, w)` with the
/// significant band of each row.
struct StepMatrix {
    values: Vec<f64>,
    bands: Vec<(usize, usize)>,
}

fn one_step_matrix(model: &SdeModel, times: &SchemeGrid, l: usize, pts: &[f64]) -> Result<StepMatrix> {
    let n = pts.len();
    let dt = times.delta();
    let t = times.time(l);
    let mut p = vec![0.0; n * n];
    let mut bands = Vec::with_capacity(n);
    for (ui, &u) in pts.iter().enumerate() {
        let (b, a) = coeffs(model, t, u)?;
        let (mean, var) = (u + b * dt, a * dt);
        let row = &mut p[ui * n..(ui + 1) * n];
        for (v, &w) in row.iter_mut().zip(pts) {
            *v = gauss(w, mean, var);
        }
        bands.push(band(row));
    }
    Ok(StepMatrix { values: p, bands })
}

/// `H(t_l, t_m, u, x′)` on the grid for `m ≥ l + 2`, row-major over `(u, x′)`.
///
/// The frozen one-step density depends on `(w − u, x′)` only, so it is
/// tabulated per `x′` over grid offsets.
fn kernel_matrix(
    model: &SdeModel,
    times: &SchemeGrid,
    l: usize,
    m: usize,
    pts: &[f64],
    w: &[f64],
    p1: &StepMatrix,
    h: f64,
) -> Result<Vec<f64>> {
    let n = pts.len();
    let dt = times.delta();
    let t = times.time(l);
    // q[w][k] = weight_w · p̃^{x′_k}(t_{l+1}, t_m, y_w, x′_k), also kept by column.
    let mut q = vec![0.0; n * n];
    let mut q_cols = vec![0.0; n * n];
    let mut frozen_offsets = vec![0.0; n * (2 * n - 1)];
    let mut offset_bands = Vec::with_capacity(n);
    for (k, &xp) in pts.iter().enumerate() {
        let (shift, var) = frozen_moments(model, times, l + 1, m, xp)?;
        for wi in 0..n {
            let v = w[wi] * gauss(xp, pts[wi] + shift, var);
            q[wi * n + k] = v;
            q_cols[k * n + wi] = v;
        }
        let (bf, af) = coeffs(model, t, xp)?;
        let row = &mut frozen_offsets[k * (2 * n - 1)..(k + 1) * (2 * n - 1)];
        for (o, g) in row.iter_mut().enumerate() {
            let off = (o as f64 - (n - 1) as f64) * h;
            *g = gauss(off, bf * dt, af * dt);
        }
        offset_bands.push(band(row));
    }
    // First part: P1 · Q over the band of each row of P1.
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        let orow = &mut out[u * n..(u + 1) * n];
        let (b0, b1) = p1.bands[u];
        for wi in b0..b1 {
            let a = p1.values[u * n + wi];
            let qrow = &q[wi * n..(wi + 1) * n];
            for (o, qv) in orow.iter_mut().zip(qrow) {
                *o += a * qv;
            }
        }
    }
    // Second part: Σ_w G_{x′}(y_w − y_u) q[w][x′], offset index w − u + n − 1.
    for k in 0..n {
        let g = &frozen_offsets[k * (2 * n - 1)..(k + 1) * (2 * n - 1)];
        let qcol = &q_cols[k * n..(k + 1) * n];
        let (o0, o1) = offset_bands[k];
        for u in 0..n {
            // w ranges where the offset w − u + n − 1 lies in [o0, o1).
            let w0 = (o0 + u).saturating_sub(n - 1);
            let w1 = (o1 + u).saturating_sub(n - 1).min(n);
            let s = if w0 < w1 { dot4(&g[w0 + n - 1 - u..w1 + n - 1 - u], &qcol[w0..w1]) } else { 0.0 };
            out[u * n + k] = (out[u * n + k] - s) / dt;
        }
    }
    Ok(out)
}

/// `Σ_{r=0}^{r_max} p̃ ⊗_Δ H^{(r)}(t_j, t_j′, x, ·)` on the grid.
///
/// Each `H(t_l, t_m)` matrix is built once and applied to every order `r`.
/// Models with constant coefficients have `H ≡ 0` and return the `r = 0` term.
pub fn parametrix_series(
    model: &SdeModel,
    times: &SchemeGrid,
    j: usize,
    j_prime: usize,
    x: f64,
    grid: &Grid1D,
    r_max: usize,
) -> Result<ParametrixSeries> {
    check_1d(model)?;
    check_indices(times, j, j_prime)?;
    if r_max > j_prime - j {
        bail!(InvalidArgument, "r_max = {r_max} exceeds j′ − j = {}", j_prime - j);
    }
    let n = grid.len();
    let pts = grid.points();
    let w = grid.weights();
    let h = grid.spacing();
    let dt = times.delta();
    let steps = j_prime - j;
    // terms[r][m − j − 1]: p̃ ⊗ H^{(r)}(t_j, t_m, x, ·) for m = j+1..=j′.
    let mut terms = vec![vec![vec![0.0; n]; steps]; r_max + 1];
    for m in j + 1..=j_prime {
        for (k, &xp) in pts.iter().enumerate() {
            terms[0][m - j - 1][k] = frozen_density(model, times, j, m, x, xp)?;
        }
    }
    if r_max > 0 && !model.is_constant() {
        let mut p1_cache: Vec<Option<StepMatrix>> = (0..steps).map(|_| None).collect();
        for m in j + 1..=j_prime {
            // l = j: the Dirac slice of p̃ contributes Δ·H(t_j, t_m, x, ·) to r = 1.
            for (k, &xp) in pts.iter().enumerate() {
                terms[1][m - j - 1][k] += dt * kernel_h(model, times, j, m, x, xp, grid)?;
            }
            for l in j + 1..m {
                let hm = if m == l + 1 {
                    let mut out = vec![0.0; n * n];
                    for (ui, &u) in pts.iter().enumerate() {
                        for (k, &xp) in pts.iter().enumerate() {
                            out[ui * n + k] = kernel_h(model, times, l, m, u, xp, grid)?;
                        }
                    }
                    out
                } else {
                    let idx = l - j;
                    if p1_cache[idx].is_none() {
                        p1_cache[idx] = Some(one_step_matrix(model, times, l, &pts)?);
                    }
                    kernel_matrix(model, times, l, m, &pts, &w, p1_cache[idx].as_ref().expect("cached above"), h)?
                };
                for r in (1..=r_max).rev() {
                    let prev = &terms[r - 1][l - j - 1];
                    let mut acc = vec![0.0; n];
                    for ui in 0..n {
                        let s = dt * w[ui] * prev[ui];
                        if s == 0.0 {
                            continue;
                        }
                        let row = &hm[ui * n..(ui + 1) * n];
                        for (a, hv) in acc.iter_mut().zip(row) {
                            *a += s * hv;
                        }
                    }
                    terms[r][m - j - 1].iter_mut().zip(&acc).for_each(|(t, a)| *t += a);
                }
            }
        }
    }
    let mut sum = vec![0.0; n];
    let mut tables = Vec::with_capacity(r_max + 1);
    let mut norms = Vec::with_capacity(r_max + 1);
    for (r, family) in terms.into_iter().enumerate() {
        let last = family.into_iter().last().expect("at least one step");
        sum.iter_mut().zip(&last).for_each(|(s, v)| *s += v);
        let tab = DensityTable::vector(*grid, j, j_prime, x, last, r > 0)?;
        norms.push(tab.sup_norm());
        tables.push(tab);
    }
    let mut divergence_warning = None;
    for r in 2..norms.len() {
        if norms[r] > 0.0 && norms[r] >= norms[r - 1] {
            divergence_warning = Some(alloc::format!(
                "term {r} (sup norm {:e}) does not decay from term {} ({:e}); the grid or truncation is suspect",
                norms[r],
                r - 1,
                norms[r - 1]
            ));
            break;
        }
    }
    // A truncated series may dip below zero at round-off level in the tails.
    let sup = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let signed = sum.iter().any(|v| *v < -SERIES_NEGATIVE_TOL * sup);
    Ok(ParametrixSeries {
        density: DensityTable::vector(*grid, j, j_prime, x, sum, signed)?,
        terms: tables,
        term_norms: norms,
        divergence_warning,
    })
}

/// Largest mass the grid may lose per step in [`chapman_kolmogorov_density`].
pub const CK_MASS_LOSS_TOL: f64 = 1e-8;

/// `p(t_j, t_j′, x, ·)` by composing one-step transition tables with the
/// trapezoidal rule.
pub fn chapman_kolmogorov_density(
    model: &SdeModel,
    times: &SchemeGrid,
    j: usize,
    j_prime: usize,
    x: f64,
    grid: &Grid1D,
) -> Result<DensityTable> {
    check_1d(model)?;
    check_indices(times, j, j_prime)?;
    let pts = grid.points();
    let w = grid.weights();
    let n = grid.len();
    let mut v = Vec::with_capacity(n);
    for &xp in &pts {
        v.push(one_step_density(model, times, j, x, xp)?);
    }
    let mut mass = grid.integrate(&v);
    if 1.0 - mass > CK_MASS_LOSS_TOL {
        bail!(Truncation, "first step loses mass {:e} on the grid", 1.0 - mass);
    }
    for l in j + 1..j_prime {
        let p = one_step_matrix(model, times, l, &pts)?;
        let mut next = vec![0.0; n];
        for u in 0..n {
            let s = w[u] * v[u];
            if s == 0.0 {
                continue;
            }
            for (o, pv) in next.iter_mut().zip(&p.values[u * n..(u + 1) * n]) {
                *o += s * pv;
            }
        }
        let new_mass = grid.integrate(&next);
        if mass - new_mass > CK_MASS_LOSS_TOL {
            bail!(Truncation, "step {l} loses mass {:e} on the grid", mass - new_mass);
        }
        mass = new_mass;
        v = next;
    }
    DensityTable::vector(*grid, j, j_prime, x, v, false)
}

/// Envelope ratios of a density table against `p_c` and `p_{c⁻¹}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    /// `sup table/p_c`.
    pub upper_ratio: f64,
    /// `inf table/p_{c⁻¹}`.
    pub lower_ratio: f64,
    pub points_used: usize,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

impl EnvelopeCheck {
    pub fn holds(&self) -> bool {
        self.upper_holds && self.lower_holds
    }
}

/// Density values below this are left out of [`aronson_envelope_check`].
pub const ENVELOPE_MIN_DENSITY: f64 = 1e-10;

/// Evaluates `C⁻¹p_{c⁻¹} ≤ table ≤ C p_c` on grid points where the table exceeds 10⁻¹⁰.
pub fn aronson_envelope_check(table: &DensityTable, gauss: GaussParams, t_elapsed: f64, x: f64) -> Result<EnvelopeCheck> {
    if table.signed || table.is_matrix() {
        bail!(InvalidArgument, "envelope check needs a probability vector table");
    }
    let upper = KernelSpec::new(CaseTag::NonDegenerate, gauss.shape, t_elapsed, vec![x])?;
    let lower = KernelSpec::new(CaseTag::NonDegenerate, 1.0 / gauss.shape, t_elapsed, vec![x])?;
    let mut up = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut used = 0;
    for (xp, &v) in table.grid.points().into_iter().zip(&table.values) {
        if v <= ENVELOPE_MIN_DENSITY {
            continue;
        }
        used += 1;
        up = up.max(v / gaussianref::p_c_density(&upper, &[xp]));
        lo = lo.min(v / gaussianref::p_c_density(&lower, &[xp]));
    }
    if used == 0 {
        bail!(InvalidArgument, "no grid point carries density above {ENVELOPE_MIN_DENSITY:e}");
    }
    Ok(EnvelopeCheck {
        upper_ratio: up,
        lower_ratio: lo,
        points_used: used,
        upper_holds: up <= gauss.domination,
        lower_holds: lo >= 1.0 / gauss.domination,
    })
}
