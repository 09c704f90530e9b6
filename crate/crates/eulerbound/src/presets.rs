//! Models, functionals and growth specs named by the config.

use std::f64::consts::PI;
use std::sync::Arc;

use eulerbound_core::gaussianref::q_tail;
use eulerbound_core::model::{
    check_growth, growth_rays, AssumptionConstants, Coefficients, DirectionSet, LangevinCoefficients,
    TrigCoefficients,
};
use eulerbound_core::{linalg, sphere, GaussParams, GrowthSpec, SchemeGrid, SdeModel};

use crate::config::{ExperimentConfig, FunctionalPreset, ModelPreset};
use crate::error::{config_err, Result};

pub type Functional = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn build_model(cfg: &ExperimentConfig) -> Result<SdeModel> {
    let case = cfg.case_tag();
    let nd = case.noise_dim(cfg.dim) as f64;
    let base = match cfg.model {
        ModelPreset::Gaussian => SdeModel::gaussian(case, cfg.dim)?,
        ModelPreset::Constant => SdeModel::constant(case, cfg.dim, cfg.drift, cfg.sigma)?,
        ModelPreset::Trig => {
            let k = cfg.diffusion_amplitude;
            if !(k.abs() < 1.0) {
                return Err(config_err!("trig preset needs |diffusion_amplitude| < 1, got {k}"));
            }
            let coeffs = TrigCoefficients {
                noise_dim: case.noise_dim(cfg.dim),
                drift_amplitude: cfg.drift_amplitude,
                diffusion_amplitude: k,
            };
            // a ∈ [1 − |κ|, 1 + |κ|]; |a(x) − a(y)| ≤ |κ||x − y|.
            let consts = AssumptionConstants::new(
                (1.0 + k.abs()).max(1.0 / (1.0 - k.abs())),
                (cfg.drift_amplitude.abs() * nd.sqrt()).max(k.abs()).max(1.0),
                1.0,
            )?;
            SdeModel::new(case, cfg.dim, Arc::new(coeffs), consts)?
        }
        ModelPreset::Langevin => {
            let s = cfg.sigma;
            if !(s > 0.0 && s.is_finite()) {
                return Err(config_err!("sigma must be positive, got {s}"));
            }
            let coeffs = LangevinCoefficients {
                noise_dim: case.noise_dim(cfg.dim),
                drift: cfg.drift,
                friction: cfg.friction,
                sigma: s,
            };
            let consts = AssumptionConstants::new(
                (s * s).max(1.0 / (s * s)),
                ((cfg.drift.abs() + cfg.friction.abs()) * nd.sqrt()).max(1.0),
                1.0,
            )?;
            SdeModel::new(case, cfg.dim, Arc::new(coeffs), consts)?
        }
    };
    if cfg.lambda0.is_none() && cfg.l0.is_none() && cfg.eta.is_none() {
        return Ok(base);
    }
    let k = base.constants();
    let consts = AssumptionConstants::new(
        cfg.lambda0.unwrap_or(k.lambda0),
        cfg.l0.unwrap_or(k.l0),
        cfg.eta.unwrap_or(k.eta),
    )?;
    Ok(SdeModel::new(case, cfg.dim, Arc::clone(base.coefficients()) as Arc<dyn Coefficients>, consts)?)
}

pub fn scheme_grid(cfg: &ExperimentConfig) -> Result<SchemeGrid> {
    Ok(SchemeGrid::new(cfg.horizon, cfg.steps)?)
}

pub fn gauss_params(cfg: &ExperimentConfig) -> Result<GaussParams> {
    Ok(GaussParams::new(cfg.c, cfg.big_c)?)
}

pub fn functional(cfg: &ExperimentConfig) -> Functional {
    let s = cfg.scale;
    let level = cfg.clip_level;
    match cfg.functional {
        FunctionalPreset::Identity => Box::new(move |x: &[f64]| s * x[0]),
        FunctionalPreset::Abs => Box::new(move |x: &[f64]| s * x[0].abs()),
        FunctionalPreset::Norm => Box::new(move |x: &[f64]| s * linalg::norm(x)),
        FunctionalPreset::Clip => Box::new(move |x: &[f64]| s * x[0].clamp(-level, level)),
    }
}

/// `E f(X_T^Δ)` in closed form, where known.
///
/// Constant-coefficient presets have an exactly Gaussian first coordinate
/// `N(x₁ + bT, s²T)` (the velocity block in the kinetic case).
pub fn analytic_mean(cfg: &ExperimentConfig) -> Option<f64> {
    let constant = match cfg.model {
        ModelPreset::Gaussian => Some((0.0, 1.0)),
        ModelPreset::Constant => Some((cfg.drift, cfg.sigma)),
        ModelPreset::Langevin if cfg.friction == 0.0 => Some((cfg.drift, cfg.sigma)),
        _ => None,
    };
    let (b, s) = constant?;
    let m = cfg.start()[0] + b * cfg.horizon;
    let sd = s.abs() * cfg.horizon.sqrt();
    match cfg.functional {
        FunctionalPreset::Identity => Some(cfg.scale * m),
        FunctionalPreset::Abs => Some(cfg.scale * folded_normal_mean(m, sd)),
        FunctionalPreset::Norm if cfg.dim == 1 => Some(cfg.scale * folded_normal_mean(m, sd)),
        _ => None,
    }
}

/// `E|N(m, s²)|`.
fn folded_normal_mean(m: f64, s: f64) -> f64 {
    let u = m.abs() / s;
    let tail = q_tail(1, u) / (2.0 * PI).sqrt();
    s * (2.0 / PI).sqrt() * (-0.5 * u * u).exp() + m.abs() * (1.0 - 2.0 * tail)
}

/// Growth spec from `rho0`, `beta`, `a_measure`, checked against the
/// configured functional along sampled rays.
pub fn growth_spec(cfg: &ExperimentConfig, f: &dyn Fn(&[f64]) -> f64) -> Result<GrowthSpec> {
    let (Some(rho0), Some(beta)) = (cfg.rho0, cfg.beta) else {
        return Err(config_err!("lower-bound constants need rho0 and beta"));
    };
    let d = cfg.dim;
    let full = sphere::sphere_area(d);
    let a = cfg.a_measure.unwrap_or(full);
    let dirs = if d == 1 {
        match a {
            a if a == 2.0 => DirectionSet::Signs { negative: true, positive: true },
            a if a == 1.0 => DirectionSet::Signs { negative: false, positive: true },
            _ => return Err(config_err!("for dim = 1, a_measure must be 1 or 2, got {a}")),
        }
    } else {
        DirectionSet::Sphere
    };
    let spec = GrowthSpec::new(d, rho0, beta, a, dirs)?;
    if d == 1 || a >= full * (1.0 - 1e-12) {
        let radii: Vec<f64> = [1.01, 1.5, 2.0, 4.0, 10.0, 100.0].iter().map(|k| k * rho0).collect();
        let check = check_growth(f, &spec, &growth_rays(d, &spec, &radii, 256))?;
        if !check.holds {
            return Err(config_err!(
                "functional violates the growth condition with rho0 = {rho0}, beta = {beta} (slack {:e})",
                check.min_slack
            ));
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CaseName;

    #[test]
    fn folded_normal_examples() {
        assert!((folded_normal_mean(0.0, 1.0) - (2.0 / PI).sqrt()).abs() < 1e-15);
        // Far from 0 the fold does nothing.
        assert!((folded_normal_mean(-12.0, 1.0) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_mean_cases() {
        let mut cfg = ExperimentConfig { model: ModelPreset::Constant, drift: 0.5, horizon: 2.0, ..Default::default() };
        assert_eq!(analytic_mean(&cfg), Some(1.0));
        cfg.model = ModelPreset::Trig;
        assert_eq!(analytic_mean(&cfg), None);
        cfg.model = ModelPreset::Langevin;
        cfg.case = CaseName::Kinetic;
        cfg.dim = 2;
        cfg.friction = 0.0;
        assert_eq!(analytic_mean(&cfg), Some(1.0));
    }

    #[test]
    fn identity_fails_growth_on_both_signs() {
        let cfg = ExperimentConfig { rho0: Some(1.0), beta: Some(1.0), ..Default::default() };
        let f = functional(&cfg);
        assert_eq!(growth_spec(&cfg, &f).unwrap_err().exit_code(), 2);
        let one_sided = ExperimentConfig { a_measure: Some(1.0), ..cfg };
        assert!(growth_spec(&one_sided, &f).is_ok());
    }

    #[test]
    fn constant_overrides() {
        let cfg = ExperimentConfig { model: ModelPreset::Trig, diffusion_amplitude: 0.5, lambda0: Some(3.0), ..Default::default() };
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.constants().lambda0, 3.0);
        assert_eq!(m.constants().l0, 1.0);
    }
}
