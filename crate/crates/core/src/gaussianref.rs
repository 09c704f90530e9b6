//! Gaussian reference kernels `p_c` of both cases, the kinetic metric, the
//! Gibbs potential `V_{T,x}` with its Hessian spectrum, and the radial tail
//! integrals `Q_d` with the sphere constant `K(d, A)`.
//!
//! Case (a): `p_c(t, x, x′) = (c/2πt)^{d/2} exp(−c|x′ − x|²/2t)`.
//!
//! Case (b), `x = (v, z)`, `d = 2d′`:
//! `p_c(t, x, x′) = (√3 c/2πt²)^{d′} exp(−c{|v′ − v|²/4t + 3|z′ − z − (v + v′)t/2|²/t³})`,
//! a Gaussian with mean `(v, z + vt)` and covariance `(2/c)·[[t, t²/2], [t²/2, t³/3]]`
//! per coordinate pair. The exact law of the kinetic scheme with `b₁ = 0`,
//! `σ = I` is therefore `p_2`, not `p_1`.
//!
//! The kinetic metric `d²_t = |Δv|²/2t + 6|Δz − (v + v′)t/2|²/t³` uses twice
//! the weights of the exponent above, so `exponent = −(c/2)·d²_t`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};
use crate::linalg::{self, Matrix};
use crate::model::CaseTag;
use crate::quadrature::{self, QuadratureOptions};

/// Parameters of a reference kernel `p_c(t, x, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub case: CaseTag,
    pub c: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

impl KernelSpec {
    pub fn new(case: CaseTag, c: f64, t: f64, x: Vec<f64>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            bail!(InvalidArgument, "shape constant must be positive, got {c}");
        }
        if !(t > 0.0 && t.is_finite()) {
            bail!(InvalidArgument, "elapsed time must be positive, got {t}");
        }
        if x.is_empty() || (case == CaseTag::Kinetic && !x.len().is_multiple_of(2)) {
            bail!(InvalidArgument, "base point of dimension {} does not fit case {case:?}", x.len());
        }
        Ok(Self { case, c, t, x })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Same kernel with another base point or time.
    pub fn at(&self, t: f64, x: Vec<f64>) -> Result<Self> {
        Self::new(self.case, self.c, t, x)
    }

    /// Mean of `p_c(t, x, ·)`: `x` in case (a), `(v, z + vt)` in case (b).
    pub fn mean(&self) -> Vec<f64> {
        match self.case {
            CaseTag::NonDegenerate => self.x.clone(),
            CaseTag::Kinetic => {
                let n = self.dim() / 2;
                let mut m = self.x.clone();
                for i in 0..n {
                    m[n + i] += self.x[i] * self.t;
                }
                m
            }
        }
    }

    /// Covariance of `p_c(t, x, ·)`.
    pub fn covariance(&self) -> Matrix {
        let d = self.dim();
        match self.case {
            CaseTag::NonDegenerate => Matrix::scaled_identity(d, self.t / self.c),
            CaseTag::Kinetic => {
                let n = d / 2;
                let t = self.t;
                let s = 2.0 / self.c;
                let mut m = Matrix::zeros(d, d);
                for i in 0..n {
                    m[(i, i)] = s * t;
                    m[(i, n + i)] = s * t * t / 2.0;
                    m[(n + i, i)] = s * t * t / 2.0;
                    m[(n + i, n + i)] = s * t * t * t / 3.0;
                }
                m
            }
        }
    }
}

/// Normalization `Z` with `p_c = e^{−V}/Z`:
/// `(2πt/c)^{d/2}` in case (a), `(2πt²/(√3c))^{d′}` in case (b).
pub fn normalization(case: CaseTag, d: usize, c: f64, t: f64) -> f64 {
    match case {
        CaseTag::NonDegenerate => (2.0 * PI * t / c).powf(d as f64 / 2.0),
        CaseTag::Kinetic => (2.0 * PI * t * t / (3f64.sqrt() * c)).powf((d / 2) as f64),
    }
}

/// The exponent of `p_c(t, x, x′)`, i.e. `−V_{t,x}(x′)`.
pub fn kernel_exponent(spec: &KernelSpec, x_prime: &[f64]) -> f64 {
    -potential_value(spec.case, spec.c, spec.t, &spec.x, x_prime)
}

pub fn log_p_c_density(spec: &KernelSpec, x_prime: &[f64]) -> f64 {
    kernel_exponent(spec, x_prime) - normalization(spec.case, spec.dim(), spec.c, spec.t).ln()
}

/// `p_c(t, x, x′)`.
pub fn p_c_density(spec: &KernelSpec, x_prime: &[f64]) -> f64 {
    assert_eq!(x_prime.len(), spec.dim(), "x′ has the wrong dimension");
    kernel_exponent(spec, x_prime).exp() / normalization(spec.case, spec.dim(), spec.c, spec.t)
}

fn potential_value(case: CaseTag, c: f64, t: f64, x: &[f64], y: &[f64]) -> f64 {
    match case {
        CaseTag::NonDegenerate => {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
            c * r2 / (2.0 * t)
        }
        CaseTag::Kinetic => {
            let n = x.len() / 2;
            let mut dv2 = 0.0;
            let mut m2 = 0.0;
            for i in 0..n {
                let dv = y[i] - x[i];
                let m = y[n + i] - x[n + i] - (x[i] + y[i]) * t / 2.0;
                dv2 += dv * dv;
                m2 += m * m;
            }
            c * (dv2 / (4.0 * t) + 3.0 * m2 / (t * t * t))
        }
    }
}

/// `d²_t(x, x′) = |Δv|²/2t + 6|Δz − (v + v′)t/2|²/t³` for `x = (v, z) ∈ R^{2d′}`.
pub fn kinetic_metric(t: f64, x: &[f64], x_prime: &[f64], d_prime: usize) -> f64 {
    assert!(t > 0.0, "kinetic metric needs t > 0");
    assert!(x.len() == 2 * d_prime && x_prime.len() == 2 * d_prime, "points must have dimension 2d′");
    let mut dv2 = 0.0;
    let mut m2 = 0.0;
    for i in 0..d_prime {
        let dv = x_prime[i] - x[i];
        let m = x_prime[d_prime + i] - x[d_prime + i] - (x[i] + x_prime[i]) * t / 2.0;
        dv2 += dv * dv;
        m2 += m * m;
    }
    dv2 / (2.0 * t) + 6.0 * m2 / (t * t * t)
}

/// Residual of the Chapman–Kolmogorov identity for `p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupResidual {
    /// `|∫ p_c(t − s, x, u) p_c(s, u, x′) du − p_c(t, x, x′)|`.
    pub residual: f64,
    pub convolved: f64,
    pub direct: f64,
    pub quadrature_error: f64,
}

/// Default truncation radius in standard deviations for the quadrature checks.
pub const TRUNCATION_SIGMAS: f64 = 10.0;

/// Checks `p_c(t) = p_c(t − s) ∗ p_c(s)` at `(x, x′)` by adaptive quadrature
/// (case (a) with `d ≤ 2`, case (b) with `d = 2`).
pub fn semigroup_check(spec: &KernelSpec, s: f64, x_prime: &[f64]) -> Result<SemigroupResidual> {
    semigroup_check_with(spec, s, x_prime, TRUNCATION_SIGMAS, QuadratureOptions::with_tol(1e-12, 1e-10))
}

pub fn semigroup_check_with(
    spec: &KernelSpec,
    s: f64,
    x_prime: &[f64],
    sigmas: f64,
    opts: QuadratureOptions,
) -> Result<SemigroupResidual> {
    let t = spec.t;
    if !(s > 0.0 && s < t) {
        bail!(InvalidArgument, "split time must lie in (0, {t}), got {s}");
    }
    if x_prime.len() != spec.dim() {
        bail!(InvalidArgument, "x′ has dimension {}, kernel has {}", x_prime.len(), spec.dim());
    }
    let (c, case, x) = (spec.c, spec.case, &spec.x);
    let tau = t - s;
    let first = spec.at(tau, x.clone())?;
    let density = |from: &[f64], dt: f64, to: &[f64]| -> f64 {
        (-potential_value(case, c, dt, from, to)).exp() / normalization(case, from.len(), c, dt)
    };
    let est = match (case, spec.dim()) {
        (CaseTag::NonDegenerate, 1) => {
            let r = sigmas * (tau.max(s) / c).sqrt();
            let (lo, hi) = (x[0].min(x_prime[0]) - r, x[0].max(x_prime[0]) + r);
            quadrature::integrate(|u| p_c_density(&first, &[u]) * density(&[u], s, x_prime), lo, hi, opts)?
        }
        (CaseTag::NonDegenerate, 2) => {
            let r = sigmas * (tau.max(s) / c).sqrt();
            let (lo0, hi0) = (x[0].min(x_prime[0]) - r, x[0].max(x_prime[0]) + r);
            let (lo1, hi1) = (x[1].min(x_prime[1]) - r, x[1].max(x_prime[1]) + r);
            quadrature::integrate_2d(
                |u0, u1| p_c_density(&first, &[u0, u1]) * density(&[u0, u1], s, x_prime),
                (lo0, hi0),
                |_| (lo1, hi1),
                opts,
            )?
        }
        (CaseTag::Kinetic, 2) => {
            let (v, z, vp, zp) = (x[0], x[1], x_prime[0], x_prime[1]);
            // Velocity where the two position constraints agree.
            let v_star = (zp - z - v * tau / 2.0 - vp * s / 2.0) / (t / 2.0);
            let rv = sigmas * (2.0 * tau.max(s) / c).sqrt();
            let lo = v.min(vp).min(v_star) - rv;
            let hi = v.max(vp).max(v_star) + rv;
            // For fixed u_v the integrand is Gaussian in u_z: combine the two factors.
            let var1 = tau * tau * tau / (6.0 * c);
            let var2 = s * s * s / (6.0 * c);
            let inner = |uv: f64| {
                let c1 = z + (v + uv) * tau / 2.0;
                let c2 = zp - (uv + vp) * s / 2.0;
                let prec = 1.0 / var1 + 1.0 / var2;
                let centre = (c1 / var1 + c2 / var2) / prec;
                let r = sigmas / prec.sqrt();
                (centre - r, centre + r)
            };
            quadrature::integrate_2d(
                |uv, uz| p_c_density(&first, &[uv, uz]) * density(&[uv, uz], s, x_prime),
                (lo, hi),
                inner,
                opts,
            )?
        }
        _ => bail!(InvalidArgument, "semigroup check supports case (a) with d ≤ 2 and case (b) with d = 2"),
    };
    let direct = p_c_density(spec, x_prime);
    Ok(SemigroupResidual {
        residual: (est.value - direct).abs(),
        convolved: est.value,
        direct,
        quadrature_error: est.error,
    })
}

/// Total mass of `p_c(t, x, ·)` by quadrature on a `sigmas`-wide box
/// (case (a) with `d ≤ 2`, case (b) with `d = 2`).
pub fn kernel_mass(spec: &KernelSpec, sigmas: f64, opts: QuadratureOptions) -> Result<quadrature::Estimate> {
    let mean = spec.mean();
    let cov = spec.covariance();
    let half = |i: usize| sigmas * cov[(i, i)].sqrt();
    match (spec.case, spec.dim()) {
        (CaseTag::NonDegenerate, 1) => {
            quadrature::integrate(|u| p_c_density(spec, &[u]), mean[0] - half(0), mean[0] + half(0), opts)
        }
        (_, 2) => {
            let r0 = half(0);
            // Conditional law of the second coordinate given the first.
            let slope = cov[(0, 1)] / cov[(0, 0)];
            let cond_sd = (cov[(1, 1)] - cov[(0, 1)] * slope).sqrt();
            quadrature::integrate_2d(
                |a, b| p_c_density(spec, &[a, b]),
                (mean[0] - r0, mean[0] + r0),
                |a| {
                    let m = mean[1] + slope * (a - mean[0]);
                    (m - sigmas * cond_sd, m + sigmas * cond_sd)
                },
                opts,
            )
        }
        _ => bail!(InvalidArgument, "mass check supports d ≤ 2"),
    }
}

/// Parameters of the potential `V_{T,x}` with `p_c(T, x, ·) = e^{−V}/Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub case: CaseTag,
    pub c: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

impl PotentialSpec {
    pub fn new(case: CaseTag, c: f64, t: f64, x: Vec<f64>) -> Result<Self> {
        let k = KernelSpec::new(case, c, t, x)?;
        Ok(Self { case: k.case, c: k.c, t: k.t, x: k.x })
    }

    pub fn normalization(&self) -> f64 {
        normalization(self.case, self.x.len(), self.c, self.t)
    }
}

/// Value, gradient and (constant) Hessian of `V_{T,x}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

/// Evaluates `V_{T,x}(x′)`: `c|x′ − x|²/2T` in case (a) and
/// `c{|Δv|²/4T + 3|m|²/T³}`, `m = Δz − (v + v′)T/2`, in case (b).
pub fn potential_eval(spec: &PotentialSpec, x_prime: &[f64]) -> PotentialEval {
    let (c, t, x) = (spec.c, spec.t, &spec.x);
    let d = x.len();
    assert_eq!(x_prime.len(), d, "x′ has the wrong dimension");
    let value = potential_value(spec.case, c, t, x, x_prime);
    let mut gradient = vec![0.0; d];
    let mut hessian = Matrix::zeros(d, d);
    match spec.case {
        CaseTag::NonDegenerate => {
            for i in 0..d {
                gradient[i] = c * (x_prime[i] - x[i]) / t;
                hessian[(i, i)] = c / t;
            }
        }
        CaseTag::Kinetic => {
            let n = d / 2;
            for i in 0..n {
                let dv = x_prime[i] - x[i];
                let m = x_prime[n + i] - x[n + i] - (x[i] + x_prime[i]) * t / 2.0;
                gradient[i] = c * (dv / (2.0 * t) - 3.0 * m / (t * t));
                gradient[n + i] = 6.0 * c * m / (t * t * t);
                hessian[(i, i)] = 2.0 * c / t;
                hessian[(i, n + i)] = -3.0 * c / (t * t);
                hessian[(n + i, i)] = -3.0 * c / (t * t);
                hessian[(n + i, n + i)] = 6.0 * c / (t * t * t);
            }
        }
    }
    PotentialEval { value, gradient, hessian }
}

/// Extreme eigenvalues of `Hess V_{T,x}` for shape `c`.
///
/// Case (a): `(c/T, c/T)`. Case (b): with `s = √(1 + T²/3 + T⁴/9)`,
/// `λ_max = c/T + 3c(1 + s)/T³` and `λ_min = c/T + 3c(1 − s)/T³`, the latter
/// evaluated as `(c/T)(1 + T²/3)/((1 + s)(s + T²/3))` to avoid cancellation.
pub fn hessian_spectral_bounds(case: CaseTag, c: f64, t: f64) -> (f64, f64) {
    assert!(c > 0.0 && t > 0.0, "hessian bounds need c, T > 0");
    match case {
        CaseTag::NonDegenerate => (c / t, c / t),
        CaseTag::Kinetic => {
            let t2 = t * t;
            let s = (1.0 + t2 / 3.0 + t2 * t2 / 9.0).sqrt();
            let lo = (c / t) * (1.0 + t2 / 3.0) / ((1.0 + s) * (s + t2 / 3.0));
            let hi = c / t + 3.0 * c * (1.0 + s) / (t2 * t);
            (lo, hi)
        }
    }
}

/// Same bounds from the assembled `2×2` block via [`linalg::sym2_eigenvalues`].
pub fn hessian_block_eigenvalues(c: f64, t: f64) -> (f64, f64) {
    linalg::sym2_eigenvalues(2.0 * c / t, -3.0 * c / (t * t), 6.0 * c / (t * t * t))
}

/// `Q_d(x) = ∫_x^∞ ρ^{d−1} e^{−ρ²/2} dρ`.
///
/// Uses `Q_d = x^{d−2}e^{−x²/2} + (d − 2)Q_{d−2}` from `Q_2 = e^{−x²/2}` and
/// `Q_1 = √(π/2)·erfc(x/√2)`, so no `e^{x²/2}` factor ever appears.
pub fn q_tail(d: usize, x: f64) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    assert!(x >= 0.0, "tail integral needs x ≥ 0");
    let g = (-0.5 * x * x).exp();
    let mut q = if d.is_multiple_of(2) { g } else { (PI / 2.0).sqrt() * libm::erfc(x / 2f64.sqrt()) };
    let mut k = if d.is_multiple_of(2) { 2 } else { 1 };
    while k < d {
        k += 2;
        q = x.powi(k as i32 - 2) * g + (k - 2) as f64 * q;
    }
    q
}

/// `K(d, A)`: `|A|(d/2 − 1)!/2` for even `d`, `|A|·Π_{j=1}^{(d−1)/2}(j − 1/2)/√π` for odd `d`.
pub fn k_const(d: usize, a_measure: f64) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    if d.is_multiple_of(2) {
        let fact: f64 = (1..d / 2).map(|j| j as f64).product();
        a_measure * fact / 2.0
    } else {
        let prod: f64 = (1..=(d - 1) / 2).map(|j| j as f64 - 0.5).product();
        a_measure * prod / PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn standard_normal_mode() {
        let k = KernelSpec::new(CaseTag::NonDegenerate, 1.0, 1.0, vec![0.0]).unwrap();
        assert_relative_eq!(p_c_density(&k, &[0.0]), 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn kinetic_density_matches_its_gaussian_form() {
        let k = KernelSpec::new(CaseTag::Kinetic, 1.7, 0.8, vec![0.3, -0.2]).unwrap();
        let cov = k.covariance();
        let mean = k.mean();
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(0, 1)];
        let y = [0.9, 0.4];
        let (a, b) = (y[0] - mean[0], y[1] - mean[1]);
        let q = (cov[(1, 1)] * a * a - 2.0 * cov[(0, 1)] * a * b + cov[(0, 0)] * b * b) / det;
        let expect = (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
        assert_relative_eq!(p_c_density(&k, &y), expect, max_relative = 1e-12);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(kinetic_metric(1.0, &[0.0, 0.0], &[0.0, 0.0], 1), 0.0);
        assert_relative_eq!(kinetic_metric(1.0, &[0.0, 0.0], &[0.0, 0.7], 1), 6.0 * 0.49, max_relative = 1e-15);
        assert_eq!(kinetic_metric(2.5, &[1.2, 0.0], &[1.2, 3.0], 1), 0.0);
    }

    #[test]
    fn hessian_block_at_unit_parameters() {
        let p = PotentialSpec::new(CaseTag::Kinetic, 1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let e = potential_eval(&p, &[0.0, 0.0]);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
        assert_eq!(e.hessian.as_slice(), &[2.0, -3.0, -3.0, 6.0]);
        let (lo, hi) = hessian_spectral_bounds(CaseTag::Kinetic, 1.0, 1.0);
        assert_relative_eq!(lo, 4.0 - 13f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(hi, 4.0 + 13f64.sqrt(), max_relative = 1e-14);
        assert_eq!(hessian_spectral_bounds(CaseTag::NonDegenerate, 3.0, 2.0), (1.5, 1.5));
    }

    #[test]
    fn q_tail_closed_values() {
        assert_relative_eq!(q_tail(2, 1.0), (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(q_tail(4, 1.0), 3.0 * (-0.5f64).exp(), max_relative = 1e-15);
        assert!(q_tail(5, 60.0).is_finite());
    }

    #[test]
    fn k_const_examples() {
        assert_relative_eq!(k_const(2, 2.0 * PI), PI, max_relative = 1e-15);
        assert_relative_eq!(k_const(3, 4.0 * PI), 2.0 * PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(k_const(4, 2.0 * PI * PI), PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn normalization_matches_density() {
        let p = PotentialSpec::new(CaseTag::Kinetic, 0.6, 1.3, vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let k = KernelSpec::new(p.case, p.c, p.t, p.x.clone()).unwrap();
        let y = [0.5, -0.1, 0.2, 0.0];
        let v = potential_eval(&p, &y).value;
        assert_relative_eq!(p_c_density(&k, &y), (-v).exp() / p.normalization(), max_relative = 1e-14);
    }
}
