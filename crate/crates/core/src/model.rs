//! SDE models, discretization grids, Gaussian envelope constants, the growth
//! condition on test functions, and sample-based checks of the standing
//! assumptions (uniform ellipticity, bounded drift, Hölder diffusion).
//!
//! The assumption checks only see the points they are given: passing them is
//! necessary, not sufficient, for the analytic hypotheses.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Error, Result};
use crate::linalg::{self, Matrix};
use crate::sphere;

/// Which of the two scheme families a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// `d′ = d`: the noise drives every coordinate.
    NonDegenerate,
    /// `d′ = d/2`: the state is `(v, z)` with `dz = v dt`, noise only on `v`.
    Kinetic,
}

impl CaseTag {
    pub fn noise_dim(self, dim: usize) -> usize {
        match self {
            CaseTag::NonDegenerate => dim,
            CaseTag::Kinetic => dim / 2,
        }
    }
}

/// Space-time coefficients of a model.
///
/// `drift` writes `b(t, x)` (for kinetic models only the first block `b₁`),
/// a vector of length `d′`. `sigma` writes the `d′×d′` diffusion matrix in
/// row-major order.
pub trait Coefficients: Send + Sync {
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Noise dimension the coefficients were built for, if fixed.
    fn noise_dim(&self) -> Option<usize> {
        None
    }

    /// True when neither coefficient depends on `(t, x)`.
    fn is_constant(&self) -> bool {
        false
    }
}

/// Constant drift and diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCoefficients {
    pub drift: Vec<f64>,
    pub sigma: Matrix,
}

impl ConstantCoefficients {
    /// `b` constant, `σ = s·I`.
    pub fn isotropic(drift: Vec<f64>, s: f64) -> Self {
        let n = drift.len();
        Self { drift, sigma: Matrix::scaled_identity(n, s) }
    }
}

impl Coefficients for ConstantCoefficients {
    fn drift(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
    }

    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.sigma.as_slice());
    }

    fn noise_dim(&self) -> Option<usize> {
        Some(self.drift.len())
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// `b_i(x) = β·sin(x_i)` and `σ = diag(√(1 + κ·sin(x_i)))`, so that
/// `a(x) = diag(1 + κ sin(x_i))`. Needs `|κ| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigCoefficients {
    pub noise_dim: usize,
    pub drift_amplitude: f64,
    pub diffusion_amplitude: f64,
}

impl Coefficients for TrigCoefficients {
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.drift_amplitude * xi.sin();
        }
    }

    fn sigma(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.noise_dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            out[i * n + i] = (1.0 + self.diffusion_amplitude * x[i].sin()).sqrt();
        }
    }

    fn noise_dim(&self) -> Option<usize> {
        Some(self.noise_dim)
    }
}

/// Kinetic Langevin-type coefficients: `b₁(v) = drift − friction·tanh(v)`
/// (bounded) and `σ = s·I`. Only the velocity block of `x` is read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinCoefficients {
    pub noise_dim: usize,
    pub drift: f64,
    pub friction: f64,
    pub sigma: f64,
}

impl Coefficients for LangevinCoefficients {
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(&x[..self.noise_dim]) {
            *o = self.drift - self.friction * v.tanh();
        }
    }

    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        let n = self.noise_dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            out[i * n + i] = self.sigma;
        }
    }

    fn noise_dim(&self) -> Option<usize> {
        Some(self.noise_dim)
    }

    fn is_constant(&self) -> bool {
        self.friction == 0.0
    }
}

/// Coefficients given by two closures.
pub struct FnCoefficients<B, S> {
    pub drift: B,
    pub sigma: S,
}

impl<B, S> Coefficients for FnCoefficients<B, S>
where
    B: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    S: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.sigma)(t, x, out)
    }
}

/// Ellipticity constant `λ0`, bound constant `L0` and Hölder exponent `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    pub lambda0: f64,
    pub l0: f64,
    pub eta: f64,
}

impl AssumptionConstants {
    pub fn new(lambda0: f64, l0: f64, eta: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            bail!(InvalidModel, "lambda0 must be positive, got {lambda0}");
        }
        if !(l0 > 0.0 && l0.is_finite()) {
            bail!(InvalidModel, "L0 must be positive, got {l0}");
        }
        if !(eta > 0.0 && eta <= 1.0) {
            bail!(InvalidModel, "eta must lie in (0, 1], got {eta}");
        }
        Ok(Self { lambda0, l0, eta })
    }
}

/// A diffusion model together with its assumption constants.
#[derive(Clone)]
pub struct SdeModel {
    case: CaseTag,
    dim: usize,
    coefficients: Arc<dyn Coefficients>,
    constants: AssumptionConstants,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("case", &self.case)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim())
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl SdeModel {
    pub fn new(
        case: CaseTag,
        dim: usize,
        coefficients: Arc<dyn Coefficients>,
        constants: AssumptionConstants,
    ) -> Result<Self> {
        if dim == 0 {
            bail!(InvalidModel, "dimension must be at least 1");
        }
        if case == CaseTag::Kinetic && !dim.is_multiple_of(2) {
            bail!(InvalidModel, "kinetic models need an even dimension, got {dim}");
        }
        let noise_dim = case.noise_dim(dim);
        if let Some(n) = coefficients.noise_dim() {
            if n != noise_dim {
                bail!(InvalidModel, "coefficients are built for noise dimension {n}, model needs {noise_dim}");
            }
        }
        let constants = AssumptionConstants::new(constants.lambda0, constants.l0, constants.eta)?;
        Ok(Self { case, dim, coefficients, constants })
    }

    /// Constant drift `b` and `σ = s·I`; `λ0 = max(s², s⁻²)`, `L0 = max(|b|, 1)`.
    pub fn constant(case: CaseTag, dim: usize, drift: f64, s: f64) -> Result<Self> {
        let nd = case.noise_dim(dim);
        let coeffs = ConstantCoefficients::isotropic(vec![drift; nd], s);
        let s2 = s * s;
        let consts = AssumptionConstants::new(s2.max(1.0 / s2), (drift.abs() * (nd as f64).sqrt()).max(1.0), 1.0)?;
        Self::new(case, dim, Arc::new(coeffs), consts)
    }

    /// `b = 0`, `σ = I`: the exactly Gaussian case.
    pub fn gaussian(case: CaseTag, dim: usize) -> Result<Self> {
        Self::constant(case, dim, 0.0, 1.0)
    }

    pub fn case(&self) -> CaseTag {
        self.case
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.case.noise_dim(self.dim)
    }

    pub fn constants(&self) -> AssumptionConstants {
        self.constants
    }

    pub fn coefficients(&self) -> &Arc<dyn Coefficients> {
        &self.coefficients
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.is_constant()
    }

    pub fn drift_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coefficients.drift(t, x, out)
    }

    pub fn sigma_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coefficients.sigma(t, x, out)
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.noise_dim()];
        self.drift_into(t, x, &mut out);
        out
    }

    pub fn sigma(&self, t: f64, x: &[f64]) -> Matrix {
        let n = self.noise_dim();
        let mut out = Matrix::zeros(n, n);
        self.sigma_into(t, x, out.as_mut_slice());
        out
    }

    /// `a(t, x) = σσ*(t, x)`.
    pub fn diffusion(&self, t: f64, x: &[f64]) -> Matrix {
        self.sigma(t, x).gram()
    }
}

/// Uniform time grid `t_i = iΔ`, `Δ = T/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeGrid {
    horizon: f64,
    steps: usize,
}

impl SchemeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            bail!(InvalidArgument, "horizon must be positive, got {horizon}");
        }
        if steps == 0 {
            bail!(InvalidArgument, "at least one time step is required");
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_i`; `t_N` is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        assert!(i <= self.steps, "time index {i} beyond N = {}", self.steps);
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.delta()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// `φ(t)`: the last grid time not after `t`.
    pub fn floor_time(&self, t: f64) -> f64 {
        let i = ((t / self.delta()).floor() as usize).min(self.steps);
        let ti = self.time(i);
        if ti > t && i > 0 {
            self.time(i - 1)
        } else {
            ti
        }
    }
}

/// Constants `(c, C)` of the two-sided Gaussian envelope
/// `C⁻¹ p_{c⁻¹} ≤ p^Δ ≤ C p_c`. They are inputs (or fitted), never derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussParams {
    /// Shape constant `c > 0`.
    pub shape: f64,
    /// Domination constant `C ≥ 1`.
    pub domination: f64,
}

impl GaussParams {
    pub fn new(shape: f64, domination: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            bail!(InvalidArgument, "shape constant c must be positive, got {shape}");
        }
        if !(domination >= 1.0 && domination.is_finite()) {
            bail!(InvalidArgument, "domination constant C must be at least 1, got {domination}");
        }
        Ok(Self { shape, domination })
    }
}

/// The cone of directions `A ⊂ S^{d−1}` along which the growth condition holds.
#[derive(Clone)]
pub enum DirectionSet {
    Sphere,
    /// `d = 1` only: a subset of `{−1, 1}`.
    Signs { negative: bool, positive: bool },
    /// Spherical cap `{s : ⟨s, axis⟩ ≥ min_cos}`.
    Cap { axis: Vec<f64>, min_cos: f64 },
    Predicate(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

impl fmt::Debug for DirectionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sphere => write!(f, "Sphere"),
            Self::Signs { negative, positive } => {
                f.debug_struct("Signs").field("negative", negative).field("positive", positive).finish()
            }
            Self::Cap { axis, min_cos } => f.debug_struct("Cap").field("axis", axis).field("min_cos", min_cos).finish(),
            Self::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

impl DirectionSet {
    pub fn contains(&self, s: &[f64]) -> bool {
        match self {
            Self::Sphere => true,
            Self::Signs { negative, positive } => (s[0] < 0.0 && *negative) || (s[0] > 0.0 && *positive),
            Self::Cap { axis, min_cos } => linalg::dot(axis, s) >= *min_cos,
            Self::Predicate(p) => p(s),
        }
    }
}

/// Growth condition: for `|y| > ρ0` with direction in `A`,
/// `F(y) − F(ρ0·y/|y|) ≥ β |y − ρ0·y/|y||`.
#[derive(Debug, Clone)]
pub struct GrowthSpec {
    pub rho0: f64,
    pub beta: f64,
    /// Surface measure `|A|` (counting measure when `d = 1`).
    pub a_measure: f64,
    pub directions: DirectionSet,
}

impl GrowthSpec {
    pub fn new(dim: usize, rho0: f64, beta: f64, a_measure: f64, directions: DirectionSet) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            bail!(InvalidArgument, "rho0 must be positive, got {rho0}");
        }
        if !(beta > 0.0 && beta.is_finite()) {
            bail!(InvalidArgument, "beta must be positive, got {beta}");
        }
        let full = sphere::sphere_area(dim);
        if !(a_measure > 0.0 && a_measure <= full * (1.0 + 1e-12)) {
            bail!(InvalidArgument, "|A| must lie in (0, {full}], got {a_measure}");
        }
        if dim == 1 {
            if let DirectionSet::Signs { negative, positive } = directions {
                let count = negative as u8 + positive as u8;
                if (count as f64 - a_measure).abs() > 1e-12 {
                    bail!(InvalidArgument, "|A| = {a_measure} does not match {count} sign(s)");
                }
            }
        } else if matches!(directions, DirectionSet::Signs { .. }) {
            bail!(InvalidArgument, "sign direction sets only exist for d = 1");
        }
        Ok(Self { rho0, beta, a_measure, directions })
    }

    /// `A` = the whole sphere.
    pub fn full_sphere(dim: usize, rho0: f64, beta: f64) -> Result<Self> {
        let dirs = if dim == 1 { DirectionSet::Signs { negative: true, positive: true } } else { DirectionSet::Sphere };
        Self::new(dim, rho0, beta, sphere::sphere_area(dim), dirs)
    }
}

/// Outcome of [`validate_assumptions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Smallest `⟨aξ, ξ⟩/|ξ|²` seen.
    pub min_ellipticity: f64,
    /// Largest `⟨aξ, ξ⟩/|ξ|²` seen.
    pub max_ellipticity: f64,
    /// Largest `|b(t, x)|` (the `b₁` block for kinetic models).
    pub sup_drift: f64,
    /// Largest `|a(t,x) − a(t,y)|_F / |x − y|^η` over the pairs.
    pub holder_quotient: f64,
    pub directions_tested: usize,
    pub ellipticity_ok: bool,
    /// `sup|b| + Hölder quotient ≤ L0`.
    pub bound_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.ellipticity_ok && self.bound_ok
    }
}

const ELLIPTICITY_DIRECTIONS: usize = 256;

// Relative slack on the bound comparisons, for rounding in unit directions.
const CHECK_RTOL: f64 = 1e-12;

/// Checks uniform ellipticity and the drift/Hölder bound on the given samples.
///
/// Ellipticity is probed with 256 quasi-random unit directions plus the
/// coordinate axes at every point of `points`; the Hölder quotient uses the
/// Frobenius norm over `pairs` (pairs with `x = y` are skipped).
pub fn validate_assumptions(
    model: &SdeModel,
    points: &[(f64, Vec<f64>)],
    pairs: &[(f64, Vec<f64>, Vec<f64>)],
) -> Result<ValidationReport> {
    if points.is_empty() || pairs.is_empty() {
        bail!(InvalidArgument, "validation needs non-empty point and pair samples");
    }
    let d = model.dim();
    let n = model.noise_dim();
    let mut dirs = sphere::directions(n, ELLIPTICITY_DIRECTIONS);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    let diffusion = |t: f64, x: &[f64]| -> Result<Matrix> {
        let s = model.sigma(t, x);
        if !s.is_finite() {
            return Err(Error::InvalidModel(alloc::format!("sigma has non-finite entries at t = {t}, x = {x:?}")));
        }
        Ok(s.gram())
    };
    let check_dim = |x: &[f64]| -> Result<()> {
        if x.len() != d {
            bail!(InvalidArgument, "sample point has dimension {}, model has {d}", x.len());
        }
        Ok(())
    };

    let mut min_e = f64::INFINITY;
    let mut max_e = 0.0f64;
    let mut sup_b = 0.0f64;
    let mut drift = vec![0.0; n];
    for (t, x) in points {
        check_dim(x)?;
        let a = diffusion(*t, x)?;
        for xi in &dirs {
            let q = a.quadratic_form(xi);
            min_e = min_e.min(q);
            max_e = max_e.max(q);
        }
        model.drift_into(*t, x, &mut drift);
        let nb = linalg::norm(&drift);
        if !nb.is_finite() {
            bail!(InvalidModel, "drift is not finite at t = {t}, x = {x:?}");
        }
        sup_b = sup_b.max(nb);
    }

    let eta = model.constants().eta;
    let mut holder = 0.0f64;
    for (t, x, y) in pairs {
        check_dim(x)?;
        check_dim(y)?;
        let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        let ax = diffusion(*t, x)?;
        let ay = diffusion(*t, y)?;
        let mut diff = ax.clone();
        diff.as_mut_slice().iter_mut().zip(ay.as_slice()).for_each(|(p, q)| *p -= q);
        holder = holder.max(diff.norm() / dist.powf(eta));
    }

    let c = model.constants();
    Ok(ValidationReport {
        min_ellipticity: min_e,
        max_ellipticity: max_e,
        sup_drift: sup_b,
        holder_quotient: holder,
        directions_tested: dirs.len(),
        ellipticity_ok: min_e > 0.0 && min_e >= (1.0 - CHECK_RTOL) / c.lambda0 && max_e <= c.lambda0 * (1.0 + CHECK_RTOL),
        bound_ok: sup_b + holder <= c.l0 * (1.0 + CHECK_RTOL),
    })
}

/// Outcome of [`check_growth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCheck {
    pub holds: bool,
    /// `min over rays of F(ρs) − F(ρ0 s) − β(ρ − ρ0)`.
    pub min_slack: f64,
}

/// Checks the growth condition along sampled rays `(s, ρ)` with `s ∈ A`, `ρ > ρ0`.
///
/// A ray passes when its slack is at least `−1e−12·(1 + |F(ρs)| + |F(ρ0 s)|)`,
/// which absorbs rounding in evaluating `F` on non-axis directions.
pub fn check_growth(f: &dyn Fn(&[f64]) -> f64, spec: &GrowthSpec, rays: &[(Vec<f64>, f64)]) -> Result<GrowthCheck> {
    if rays.is_empty() {
        bail!(InvalidArgument, "growth check needs at least one ray");
    }
    let mut holds = true;
    let mut min_slack = f64::INFINITY;
    for (s, rho) in rays {
        if (linalg::norm(s) - 1.0).abs() > 1e-9 {
            bail!(InvalidArgument, "ray direction {s:?} is not a unit vector");
        }
        if !spec.directions.contains(s) {
            bail!(InvalidArgument, "ray direction {s:?} is outside the direction set");
        }
        if !(*rho > spec.rho0) {
            bail!(InvalidArgument, "ray radius {rho} must exceed rho0 = {}", spec.rho0);
        }
        let far: Vec<f64> = s.iter().map(|c| c * rho).collect();
        let near: Vec<f64> = s.iter().map(|c| c * spec.rho0).collect();
        let (f_far, f_near) = (f(&far), f(&near));
        let slack = f_far - f_near - spec.beta * (rho - spec.rho0);
        if slack < -1e-12 * (1.0 + f_far.abs() + f_near.abs()) {
            holds = false;
        }
        min_slack = min_slack.min(slack);
    }
    Ok(GrowthCheck { holds, min_slack })
}

/// Rays `(s, ρ)` for every direction of a quasi-random sphere set that lies in `A`,
/// at each of the given radii.
pub fn growth_rays(dim: usize, spec: &GrowthSpec, radii: &[f64], count: usize) -> Vec<(Vec<f64>, f64)> {
    let mut rays = Vec::new();
    for s in sphere::directions(dim, count) {
        if spec.directions.contains(&s) {
            for &r in radii {
                rays.push((s.clone(), r));
            }
        }
    }
    rays
}

/// Name of a case, as used in reports.
pub fn case_name(case: CaseTag) -> String {
    match case {
        CaseTag::NonDegenerate => String::from("non-degenerate"),
        CaseTag::Kinetic => String::from("kinetic"),
    }
}
