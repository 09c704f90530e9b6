//! Concentration constants and deviation bounds for the Monte Carlo error
//! `E_MC(M, Δ)` of the scheme.
//!
//! Upper bound: `P(|E_MC| ≥ r + δ) ≤ 2 exp(−M r²/α(T))` with
//! `δ = 2√(α(T) log C)` and `α(T) = 2/λ_min`, `λ_min` the smallest eigenvalue
//! of the Hessian of the potential of `p_c(T, x, ·)`.
//!
//! Lower bound, for `F ≥ 0` growing like `β|y|` beyond `ρ0` in a cone `A`:
//! `P(|E_MC| ≥ r − δ̄) ≥ 2 exp(−M ᾱ⁻¹ max(r/β, ρ0)²)` with `ᾱ⁻¹ = Λ̄ + χ`
//! (`θΛ̄ + χ` for odd `d`).
//!
//! In case (b) `α(T) → 4T/c` as `T → 0`; the velocity block alone would
//! give `2T/c`, and the coupling with the position block doubles it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand_distr::{Distribution, Uniform};

use crate::error::{bail, Error, Result};
use crate::gaussianref::{self, KernelSpec, PotentialSpec};
use crate::linalg;
use crate::model::{CaseTag, GaussParams, GrowthSpec};
use crate::quadrature::{self, QuadratureOptions};
use crate::simulate::{fill_normals, RngSpec};
use crate::sphere;

/// Log-Sobolev constant `2/λ` of a Gibbs measure with `Hess V ≥ λ I`.
pub fn lsi_constant(lambda_min: f64) -> Result<f64> {
    if !(lambda_min > 0.0) {
        bail!(InvalidArgument, "lambda must be positive, got {lambda_min}");
    }
    Ok(2.0 / lambda_min)
}

/// `α(T)`: `2T/c` in case (a); in case (b) the inverse of
/// `(c/2T)(1 + (3/T²)(1 − √(1 + T²/3 + T⁴/9)))`.
pub fn alpha_t(case: CaseTag, c: f64, t: f64) -> f64 {
    match case {
        CaseTag::NonDegenerate => 2.0 * t / c,
        CaseTag::Kinetic => 2.0 / gaussianref::hessian_spectral_bounds(case, c, t).0,
    }
}

/// `α = 2T/((4 − √13)c)` for the functionals of `T_T^{-1} X_T` (time-rescaled
/// kinetic state), whose Hessian is `(c/T)[[2, −3], [−3, 6]]`.
pub fn alpha_t_asian(c: f64, t: f64) -> f64 {
    2.0 * t / ((4.0 - 13f64.sqrt()) * c)
}

/// `δ_{C,α} = 2√(α log C)`.
pub fn delta_bias(big_c: f64, alpha: f64) -> Result<f64> {
    if !(big_c >= 1.0) {
        bail!(InvalidArgument, "domination constant must be at least 1, got {big_c}");
    }
    if !(alpha > 0.0) {
        bail!(InvalidArgument, "alpha must be positive, got {alpha}");
    }
    Ok(2.0 * (alpha * big_c.ln()).sqrt())
}

/// `2 exp(−M r²/α)`, not clipped at 1.
pub fn upper_tail_bound(r: f64, m: usize, alpha: f64) -> f64 {
    2.0 * (-(m as f64) * r * r / alpha).exp()
}

/// The `r` with `upper_tail_bound(r, M, α) = ε`: `√((α/M) log(2/ε))`, for `ε ∈ (0, 2]`.
pub fn confidence_radius(epsilon: f64, m: usize, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        bail!(InvalidArgument, "confidence level must lie in (0, 2], got {epsilon}");
    }
    if m == 0 || !(alpha > 0.0) {
        bail!(InvalidArgument, "need M ≥ 1 and alpha > 0");
    }
    Ok((alpha / m as f64 * (2.0 / epsilon).ln()).sqrt())
}

/// Constants of the upper deviation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    pub case: CaseTag,
    pub gauss: GaussParams,
    pub horizon: f64,
    pub alpha_t: f64,
    pub delta_bias: f64,
}

/// Radius `r` for a confidence level and the total `r + δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceRadius {
    pub epsilon: f64,
    pub radius: f64,
    pub total: f64,
}

impl UpperBound {
    pub fn new(case: CaseTag, gauss: GaussParams, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            bail!(InvalidArgument, "horizon must be positive, got {horizon}");
        }
        let alpha = alpha_t(case, gauss.shape, horizon);
        Ok(Self { case, gauss, horizon, alpha_t: alpha, delta_bias: delta_bias(gauss.domination, alpha)? })
    }

    /// Bound on `P(|E_MC| ≥ r + δ)`.
    pub fn tail(&self, r: f64, m: usize) -> f64 {
        upper_tail_bound(r, m, self.alpha_t)
    }

    pub fn radius(&self, epsilon: f64, m: usize) -> Result<ConfidenceRadius> {
        let r = confidence_radius(epsilon, m, self.alpha_t)?;
        Ok(ConfidenceRadius { epsilon, radius: r, total: r + self.delta_bias })
    }
}

fn check_lower_inputs(d: usize, rho0: f64, big_c: f64, a_measure: f64) -> Result<()> {
    if d == 0 {
        bail!(InvalidArgument, "dimension must be positive");
    }
    if !(rho0 > 0.0) {
        bail!(InvalidArgument, "rho0 must be positive, got {rho0}");
    }
    if !(big_c >= 1.0) {
        bail!(InvalidArgument, "domination constant must be at least 1, got {big_c}");
    }
    if !(a_measure > 0.0) {
        bail!(InvalidArgument, "|A| must be positive, got {a_measure}");
    }
    Ok(())
}

fn odd_theta(d: usize, theta: Option<f64>) -> Result<Option<f64>> {
    if d.is_multiple_of(2) {
        return Ok(None);
    }
    match theta {
        Some(th) if th > 1.0 && th.is_finite() => Ok(Some(th)),
        Some(th) => bail!(InvalidArgument, "theta must exceed 1, got {th}"),
        None => bail!(InvalidArgument, "odd dimension needs theta > 1"),
    }
}

fn log_plus(x: f64) -> f64 {
    x.max(0.0)
}

/// `χ` as displayed for the Gaussian bounds.
///
/// Case (a): `log(π^{d/2} C / K(d, A))₊/ρ0²` for even `d`, with an extra
/// `arccos(θ^{−1/2})` in the denominator for odd `d`. Case (b) (even `d`):
/// `log((π/T)^{d/2}[T² + 3(1 + √(1 + T²/3 + T⁴/9))]^{d/2} C / K(d, A))₊/ρ0²`.
///
/// The case (b) display uses `Z = (2πc)^{d/2}T^d`; the exact normalization
/// carries an extra `3^{−d/4}`, so this value is conservative. The exact
/// version is [`chi_general`] with [`gaussianref::normalization`].
pub fn chi_correction(
    case: CaseTag,
    d: usize,
    rho0: f64,
    big_c: f64,
    a_measure: f64,
    theta: Option<f64>,
    t: f64,
) -> Result<f64> {
    check_lower_inputs(d, rho0, big_c, a_measure)?;
    let k = gaussianref::k_const(d, a_measure);
    let half_d = d as f64 / 2.0;
    let log_arg = match case {
        CaseTag::NonDegenerate => {
            let base = half_d * PI.ln() + big_c.ln() - k.ln();
            match odd_theta(d, theta)? {
                Some(th) => base - (1.0 / th.sqrt()).acos().ln(),
                None => base,
            }
        }
        CaseTag::Kinetic => {
            if !d.is_multiple_of(2) {
                bail!(InvalidArgument, "kinetic models have even dimension, got {d}");
            }
            if !(t > 0.0) {
                bail!(InvalidArgument, "horizon must be positive, got {t}");
            }
            let s = (1.0 + t * t / 3.0 + t.powi(4) / 9.0).sqrt();
            half_d * (PI / t).ln() + half_d * (t * t + 3.0 * (1.0 + s)).ln() + big_c.ln() - k.ln()
        }
    };
    Ok(log_plus(log_arg) / (rho0 * rho0))
}

/// `χ = log(Z Λ̄^{d/2} κ / (K(d, A)[arccos θ^{−1/2}]))₊/ρ0²` for a generic
/// Gibbs reference with normalization `Z`.
pub fn chi_general(
    d: usize,
    rho0: f64,
    normalization: f64,
    big_lambda: f64,
    kappa: f64,
    a_measure: f64,
    theta: Option<f64>,
) -> Result<f64> {
    check_lower_inputs(d, rho0, kappa, a_measure)?;
    if !(normalization > 0.0 && big_lambda > 0.0) {
        bail!(InvalidArgument, "normalization and Lambda must be positive");
    }
    let mut log_arg = normalization.ln() + d as f64 / 2.0 * big_lambda.ln() + kappa.ln()
        - gaussianref::k_const(d, a_measure).ln();
    if let Some(th) = odd_theta(d, theta)? {
        log_arg -= (1.0 / th.sqrt()).acos().ln();
    }
    Ok(log_plus(log_arg) / (rho0 * rho0))
}

/// `Λ̄ = λ̄/2`, `λ̄` the largest Hessian eigenvalue of the potential of
/// `p_{c⁻¹}(T, x, ·)`: `c⁻¹/2T` in case (a).
pub fn reduced_bar_lambda(case: CaseTag, c: f64, t: f64) -> f64 {
    match case {
        CaseTag::NonDegenerate => (1.0 / c) / (2.0 * t),
        CaseTag::Kinetic => gaussianref::hessian_spectral_bounds(case, 1.0 / c, t).1 / 2.0,
    }
}

/// Number of sphere directions used for sphere suprema and infima.
pub const SPHERE_DIRECTIONS: usize = 1 << 14;

/// `Λ̄ = λ̄/2 + sup_s|V(sρ0)|/ρ0² + sup_s|∇V(sρ0)|/ρ0` for the potential of
/// `p_{c⁻¹}(T, x, ·)` over the origin-centred sphere of radius `ρ0`.
///
/// Case (a) uses the closed form (`|sρ0 − x|` peaks at `ρ0 + |x|`); case (b)
/// takes the maximum over [`SPHERE_DIRECTIONS`] quasi-random directions.
pub fn full_bar_lambda(case: CaseTag, c: f64, t: f64, x: &[f64], rho0: f64) -> Result<f64> {
    if !(rho0 > 0.0) {
        bail!(InvalidArgument, "rho0 must be positive, got {rho0}");
    }
    let spec = PotentialSpec::new(case, 1.0 / c, t, x.to_vec())?;
    let reduced = reduced_bar_lambda(case, c, t);
    let (sup_v, sup_g) = match case {
        CaseTag::NonDegenerate => {
            let r = rho0 + linalg::norm(x);
            (r * r / (2.0 * c * t), r / (c * t))
        }
        CaseTag::Kinetic => {
            let mut sup_v = 0.0f64;
            let mut sup_g = 0.0f64;
            let mut y = vec![0.0; x.len()];
            for s in sphere::directions(x.len(), SPHERE_DIRECTIONS) {
                y.iter_mut().zip(&s).for_each(|(a, b)| *a = rho0 * b);
                let e = gaussianref::potential_eval(&spec, &y);
                sup_v = sup_v.max(e.value.abs());
                sup_g = sup_g.max(linalg::norm(&e.gradient));
            }
            (sup_v, sup_g)
        }
    };
    Ok(reduced + sup_v / (rho0 * rho0) + sup_g / rho0)
}

/// Which `Λ̄` enters `ᾱ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaForm {
    /// `λ̄/2` with the displayed `χ`.
    #[default]
    Reduced,
    /// Sphere-supremum form with the exact normalization in `χ`.
    Full,
}

/// Constants of the lower deviation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerConstants {
    pub form: LambdaForm,
    pub big_lambda: f64,
    pub chi: f64,
    /// `θ` for odd `d`.
    pub theta: Option<f64>,
    /// `Λ̄ + χ`, or `θΛ̄ + χ` for odd `d`.
    pub bar_alpha_inv: f64,
}

/// Inputs shared by the lower-bound constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerInput {
    pub case: CaseTag,
    pub d: usize,
    pub gauss: GaussParams,
    pub horizon: f64,
    pub rho0: f64,
    pub a_measure: f64,
    /// Odd `d` only.
    pub theta: Option<f64>,
    /// Starting point (used by the full form only).
    pub x: Vec<f64>,
}

impl LowerInput {
    pub fn new(case: CaseTag, gauss: GaussParams, horizon: f64, growth: &GrowthSpec, x: Vec<f64>, theta: Option<f64>) -> Self {
        Self { case, d: x.len(), gauss, horizon, rho0: growth.rho0, a_measure: growth.a_measure, theta, x }
    }
}

/// `1/ᾱ(T)` and its parts.
pub fn bar_alpha_inv(input: &LowerInput, form: LambdaForm) -> Result<LowerConstants> {
    let LowerInput { case, d, gauss, horizon: t, rho0, a_measure, theta, .. } = *input;
    let c = gauss.shape;
    let theta = odd_theta(d, theta)?;
    if case == CaseTag::Kinetic && d % 2 != 0 {
        bail!(InvalidArgument, "kinetic models have even dimension, got {d}");
    }
    let (big_lambda, chi) = match form {
        LambdaForm::Reduced => {
            (reduced_bar_lambda(case, c, t), chi_correction(case, d, rho0, gauss.domination, a_measure, theta, t)?)
        }
        LambdaForm::Full => {
            if input.x.len() != d {
                bail!(InvalidArgument, "starting point has dimension {}, expected {d}", input.x.len());
            }
            let bl = full_bar_lambda(case, c, t, &input.x, rho0)?;
            let z = gaussianref::normalization(case, d, 1.0 / c, t);
            (bl, chi_general(d, rho0, z, bl, gauss.domination, a_measure, theta)?)
        }
    };
    let scaled = theta.map_or(big_lambda, |th| th * big_lambda);
    Ok(LowerConstants { form, big_lambda, chi, theta, bar_alpha_inv: scaled + chi })
}

/// Minimizes `θΛ̄ + χ(θ)` over `θ ∈ (1, 100]` for odd `d` (log-grid scan then
/// golden-section refinement). Returns the optimal constants.
pub fn optimize_theta(input: &LowerInput, form: LambdaForm) -> Result<LowerConstants> {
    if input.d.is_multiple_of(2) {
        bail!(InvalidArgument, "theta only enters for odd dimension");
    }
    let eval = |th: f64| -> Result<LowerConstants> {
        let mut i = input.clone();
        i.theta = Some(th);
        bar_alpha_inv(&i, form)
    };
    // θ = 1 + e^u, u ∈ [ln 1e−9, ln 99].
    let (u_lo, u_hi) = ((1e-9f64).ln(), 99f64.ln());
    let n = 400;
    let at = |k: usize| u_lo + (u_hi - u_lo) * k as f64 / n as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=n {
        let v = eval(1.0 + at(k).exp())?.bar_alpha_inv;
        if v < best.1 {
            best = (k, v);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(n)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = b - g * (b - a);
        let m2 = a + g * (b - a);
        if eval(1.0 + m1.exp())?.bar_alpha_inv <= eval(1.0 + m2.exp())?.bar_alpha_inv {
            b = m2;
        } else {
            a = m1;
        }
    }
    let refined = eval(1.0 + (0.5 * (a + b)).exp())?;
    let grid_best = eval(1.0 + at(best.0).exp())?;
    Ok(if refined.bar_alpha_inv <= grid_best.bar_alpha_inv { refined } else { grid_best })
}

/// `2 exp(−M ᾱ⁻¹ max(r/β, ρ0)²)`.
pub fn lower_tail_bound(r: f64, m: usize, bar_alpha_inv: f64, beta: f64, rho0: f64) -> f64 {
    let s = (r / beta).max(rho0);
    2.0 * (-(m as f64) * bar_alpha_inv * s * s).exp()
}

/// `W₁(μ, γ) ≤ √(α log κ)`.
pub fn w1_bound(alpha: f64, kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) {
        bail!(InvalidArgument, "kappa must be at least 1, got {kappa}");
    }
    if !(alpha > 0.0) {
        bail!(InvalidArgument, "alpha must be positive, got {alpha}");
    }
    Ok((alpha * kappa.ln()).sqrt())
}

/// How `γ_{c⁻¹,T}(F)` is computed in [`bar_delta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarDeltaOptions {
    /// Truncation radius of the quadrature box in standard deviations.
    pub sigmas: f64,
    pub quadrature: QuadratureOptions,
    /// Monte Carlo sample count when `d > 2`.
    pub mc_samples: usize,
    pub rng: RngSpec,
    /// Directions for `F̲ = inf_s F(sρ0)`.
    pub directions: usize,
}

impl Default for BarDeltaOptions {
    fn default() -> Self {
        Self {
            sigmas: 10.0,
            quadrature: QuadratureOptions::with_tol(1e-10, 1e-10),
            mc_samples: 1 << 18,
            rng: RngSpec::new(0, 0xBD),
            directions: SPHERE_DIRECTIONS,
        }
    }
}

/// `δ̄ = (1 + √2)√(α log C) + γ_{c⁻¹,T}(F) + ρ0β − F̲` and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarDelta {
    pub w1_term: f64,
    pub gamma_f: f64,
    /// Quadrature error estimate, or the Monte Carlo standard error.
    pub gamma_f_error: f64,
    pub monte_carlo: bool,
    pub f_lower: f64,
    pub rho0_beta: f64,
    pub value: f64,
}

/// Computes `δ̄_{c,C,T,f}`; `γ_{c⁻¹,T}(F)` by quadrature for `d ≤ 2` and by
/// Monte Carlo (with standard error) otherwise.
pub fn bar_delta(
    case: CaseTag,
    gauss: GaussParams,
    horizon: f64,
    alpha: f64,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    growth: &GrowthSpec,
    opts: &BarDeltaOptions,
) -> Result<BarDelta> {
    let w1_term = (1.0 + 2f64.sqrt()) * w1_bound(alpha, gauss.domination)?;
    let kernel = KernelSpec::new(case, 1.0 / gauss.shape, horizon, x.to_vec())?;
    let d = x.len();
    let mean = kernel.mean();
    let cov = kernel.covariance();
    let (gamma_f, gamma_f_error, monte_carlo) = if d <= 2 {
        let half = |i: usize| opts.sigmas * cov[(i, i)].sqrt();
        let est = if d == 1 {
            quadrature::integrate(
                |u| f(&[u]) * gaussianref::p_c_density(&kernel, &[u]),
                mean[0] - half(0),
                mean[0] + half(0),
                opts.quadrature,
            )?
        } else {
            let slope = cov[(0, 1)] / cov[(0, 0)];
            let cond_sd = (cov[(1, 1)] - cov[(0, 1)] * slope).sqrt();
            quadrature::integrate_2d(
                |a, b| f(&[a, b]) * gaussianref::p_c_density(&kernel, &[a, b]),
                (mean[0] - half(0), mean[0] + half(0)),
                |a| {
                    let m = mean[1] + slope * (a - mean[0]);
                    (m - opts.sigmas * cond_sd, m + opts.sigmas * cond_sd)
                },
                opts.quadrature,
            )?
        };
        (est.value, est.error, false)
    } else {
        let n = opts.mc_samples.max(2);
        let l = linalg::cholesky(&cov)?;
        let mut g = vec![0.0; d];
        let mut y = vec![0.0; d];
        let (mut sum, mut sum2) = (0.0, 0.0);
        for i in 0..n {
            fill_normals(&mut opts.rng.substream(i as u64), &mut g);
            linalg::mul_vec_into(l.as_slice(), d, &g, &mut y);
            y.iter_mut().zip(&mean).for_each(|(a, m)| *a += m);
            let v = f(&y);
            if !v.is_finite() {
                return Err(Error::NonFinite { sample: Some(i as u64), detail: alloc::format!("F = {v}") });
            }
            sum += v;
            sum2 += v * v;
        }
        let mean_f = sum / n as f64;
        let var = (sum2 / n as f64 - mean_f * mean_f).max(0.0) * n as f64 / (n - 1) as f64;
        (mean_f, (var / n as f64).sqrt(), true)
    };
    if !gamma_f.is_finite() {
        bail!(Tolerance, "gamma(F) is not finite");
    }
    let f_lower = sphere_infimum(f, d, growth.rho0, opts.directions);
    let rho0_beta = growth.rho0 * growth.beta;
    Ok(BarDelta {
        w1_term,
        gamma_f,
        gamma_f_error,
        monte_carlo,
        f_lower,
        rho0_beta,
        value: w1_term + gamma_f + rho0_beta - f_lower,
    })
}

/// `inf_s F(sρ0)` over a quasi-random direction set.
pub fn sphere_infimum(f: &dyn Fn(&[f64]) -> f64, d: usize, rho0: f64, directions: usize) -> f64 {
    let mut y = vec![0.0; d];
    sphere::directions(d, directions)
        .iter()
        .map(|s| {
            y.iter_mut().zip(s).for_each(|(a, b)| *a = rho0 * b);
            f(&y)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `Ent_q(m/q) = ∫ m log(m/q)` over `support` by adaptive quadrature.
pub fn entropy_1d(
    m: &dyn Fn(f64) -> f64,
    q: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    opts: QuadratureOptions,
) -> Result<f64> {
    let mut bad: Option<Error> = None;
    let est = quadrature::integrate(
        |x| {
            let (mv, qv) = (m(x), q(x));
            if mv < 0.0 || qv < 0.0 {
                bad.get_or_insert(Error::InvalidArgument(alloc::format!("negative density at x = {x}")));
                return 0.0;
            }
            if mv == 0.0 {
                0.0
            } else if qv == 0.0 {
                bad.get_or_insert(Error::InvalidArgument(alloc::format!("m > 0 where q = 0 at x = {x}")));
                0.0
            } else {
                mv * (mv / qv).ln()
            }
        },
        support.0,
        support.1,
        opts,
    );
    if let Some(e) = bad {
        return Err(e);
    }
    Ok(est?.value)
}

/// One `λ` of [`mgf_empirical_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfRow {
    pub lambda: f64,
    /// `log mean e^{λF} − λ μ̂(F)`.
    pub centred_log_mgf: f64,
    /// `αλ²/4 + λ W₁ + log κ`, with `W₁ = √(α log κ)` and `|λ|` in the linear term.
    pub allowance: f64,
    /// `allowance − centred_log_mgf`; negative means a violation.
    pub margin: f64,
    /// Bootstrap standard error of the margin.
    pub margin_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgfReport {
    pub rows: Vec<MgfRow>,
    /// Largest `−margin` (0 when no row is violated).
    pub max_violation: f64,
    pub violations: usize,
}

/// Largest allowed `|λ|·max|F − μ̂|`.
pub const MGF_SPREAD_LIMIT: f64 = 20.0;

fn centred_log_mgf(values: &[f64], idx: Option<&[usize]>, lambda: f64) -> f64 {
    let n = idx.map_or(values.len(), |i| i.len());
    let get = |k: usize| idx.map_or(values[k], |i| values[i[k]]);
    let mean = (0..n).map(get).sum::<f64>() / n as f64;
    let s: f64 = (0..n).map(|k| (lambda * (get(k) - mean)).exp()).sum();
    (s / n as f64).ln()
}

/// Checks `log E e^{λF} ≤ λμ(F) + αλ²/4 + |λ|W₁ + log κ` on samples of `F`
/// over `lambdas`, with `bootstrap` resamples for error bars.
pub fn mgf_empirical_check(
    values: &[f64],
    alpha: f64,
    kappa: f64,
    lambdas: &[f64],
    bootstrap: usize,
    rng: RngSpec,
) -> Result<MgfReport> {
    if values.len() < 2 {
        bail!(InvalidArgument, "need at least two samples");
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        bail!(InvalidArgument, "sample value {v} is not finite");
    }
    let w1 = w1_bound(alpha, kappa)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    for &l in lambdas {
        if !(l.abs() * spread < MGF_SPREAD_LIMIT) {
            bail!(InvalidArgument, "lambda = {l} too large for sample spread {spread} (|λ|·spread must stay below {MGF_SPREAD_LIMIT})");
        }
    }
    let pick = Uniform::new(0, n).map_err(|e| Error::InvalidArgument(alloc::format!("{e}")))?;
    let resamples: Vec<Vec<usize>> = (0..bootstrap)
        .map(|b| {
            let mut r = rng.substream(b as u64);
            (0..n).map(|_| pick.sample(&mut r)).collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let centred = centred_log_mgf(values, None, l);
        let allowance = alpha * l * l / 4.0 + l.abs() * w1 + kappa.ln();
        let margin = allowance - centred;
        let margin_se = if resamples.len() >= 2 {
            let reps: Vec<f64> = resamples.iter().map(|ix| centred_log_mgf(values, Some(ix), l)).collect();
            let m = reps.iter().sum::<f64>() / reps.len() as f64;
            (reps.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push(MgfRow { lambda: l, centred_log_mgf: centred, allowance, margin, margin_se });
    }
    let violations = rows.iter().filter(|r| r.margin < 0.0).count();
    let max_violation = rows.iter().map(|r| -r.margin).fold(0.0, f64::max);
    Ok(MgfReport { rows, max_violation, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lsi_examples() {
        assert_eq!(lsi_constant(2.0).unwrap(), 1.0);
        assert_relative_eq!(lsi_constant(4.0 - 13f64.sqrt()).unwrap(), 5.070_367_3, max_relative = 1e-6);
        assert!(lsi_constant(0.0).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_t(CaseTag::NonDegenerate, 1.0, 2.0), 4.0);
        assert_relative_eq!(alpha_t(CaseTag::Kinetic, 1.0, 1.0), 2.0 / (4.0 - 13f64.sqrt()), max_relative = 1e-13);
        assert_relative_eq!(alpha_t_asian(1.0, 1.0), 2.0 / (4.0 - 13f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(alpha_t_asian(0.7, 2.4), 2.0 * alpha_t_asian(0.7, 1.2), max_relative = 1e-15);
    }

    #[test]
    fn delta_and_radius() {
        assert_eq!(delta_bias(1.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(delta_bias(core::f64::consts::E, 2.0).unwrap(), 8f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(delta_bias(4f64.exp(), 4.0).unwrap(), 8.0, max_relative = 1e-15);
        assert!(delta_bias(0.5, 1.0).is_err());
        assert_eq!(confidence_radius(2.0, 10, 1.0).unwrap(), 0.0);
        assert_relative_eq!(confidence_radius(0.05, 1000, 2.0).unwrap(), 0.085_894, max_relative = 1e-5);
        assert!(confidence_radius(2.5, 10, 1.0).is_err());
        assert!(confidence_radius(0.0, 10, 1.0).is_err());
    }

    #[test]
    fn chi_examples() {
        let chi = |c: f64| chi_correction(CaseTag::NonDegenerate, 2, 1.0, c, 2.0 * PI, None, 1.0).unwrap();
        assert_eq!(chi(1.0), 0.0);
        assert_relative_eq!(chi(core::f64::consts::E), 1.0, max_relative = 1e-14);
        assert!(chi_correction(CaseTag::Kinetic, 3, 1.0, 1.0, 1.0, None, 1.0).is_err());
        assert!(chi_correction(CaseTag::NonDegenerate, 1, 1.0, 1.0, 2.0, None, 1.0).is_err());
        assert!(chi_correction(CaseTag::NonDegenerate, 1, 1.0, 1.0, 2.0, Some(1.0), 1.0).is_err());
    }

    #[test]
    fn lower_tail_plateau() {
        let b = |r| lower_tail_bound(r, 1, 0.5, 1.0, 1.0);
        assert_eq!(b(0.1), b(1.0));
        assert_relative_eq!(b(2.0), 2.0 * (-2.0f64).exp(), max_relative = 1e-15);
        assert!(b(3.0) < b(2.0));
    }

    #[test]
    fn w1_examples() {
        assert_eq!(w1_bound(2.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(w1_bound(2.0, core::f64::consts::E).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        assert!(w1_bound(1.0, 0.5).is_err());
    }

    #[test]
    fn mgf_at_zero_lambda() {
        let v = [0.1, -0.4, 0.9, 0.3];
        let r = mgf_empirical_check(&v, 1.0, 2.0, &[0.0], 10, RngSpec::new(1, 1)).unwrap();
        assert_relative_eq!(r.rows[0].margin, 2f64.ln(), max_relative = 1e-15);
        assert_eq!(r.violations, 0);
        assert!(mgf_empirical_check(&v, 1.0, 1.0, &[100.0], 0, RngSpec::default()).is_err());
    }
}
