//! Experiment configuration: one flat JSON document.
//!
//! Every field has a default, so `{}` is a valid config. Unknown keys are
//! rejected. Values from the command line (`--set key=value`, `--seed`,
//! `--out-dir`, `--threads`) are merged over the file before parsing.
//! See `docs/config.md` in the repository for the field reference.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use eulerbound_core::concentration::LambdaForm;
use eulerbound_core::CaseTag;

use crate::error::{config_err, AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelPreset {
    /// `b = 0`, `σ = I`.
    Gaussian,
    /// Constant `b` and `σ = sigma·I`.
    Constant,
    /// `b_i = drift_amplitude·sin(x_i)`, `a = diag(1 + diffusion_amplitude·sin(x_i))`.
    Trig,
    /// Kinetic only: `b₁(v) = drift − friction·tanh(v)`, `σ = sigma·I`.
    Langevin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseName {
    #[serde(alias = "a")]
    NonDegenerate,
    #[serde(alias = "b")]
    Kinetic,
}

impl From<CaseName> for CaseTag {
    fn from(c: CaseName) -> Self {
        match c {
            CaseName::NonDegenerate => CaseTag::NonDegenerate,
            CaseName::Kinetic => CaseTag::Kinetic,
        }
    }
}

/// Functionals `f` of the terminal state, all `|scale|`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalPreset {
    /// `scale·x₁`.
    Identity,
    /// `scale·|x₁|`.
    Abs,
    /// `scale·|x|`.
    Norm,
    /// `scale·clamp(x₁, −clip_level, clip_level)`.
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaFormName {
    Reduced,
    Full,
}

impl From<LambdaFormName> for LambdaForm {
    fn from(f: LambdaFormName) -> Self {
        match f {
            LambdaFormName::Reduced => LambdaForm::Reduced,
            LambdaFormName::Full => LambdaForm::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensitySource {
    Histogram,
    /// Chapman–Kolmogorov table, 1D non-degenerate models only.
    Ck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelPreset,
    pub case: CaseName,
    pub dim: usize,
    pub drift: f64,
    pub sigma: f64,
    pub drift_amplitude: f64,
    pub diffusion_amplitude: f64,
    pub friction: f64,
    /// Overrides of the preset's assumption constants.
    pub lambda0: Option<f64>,
    pub l0: Option<f64>,
    pub eta: Option<f64>,
    /// Start point, zeros when absent.
    pub x0: Option<Vec<f64>>,

    /// `T`.
    pub horizon: f64,
    /// `N`.
    pub steps: usize,

    /// Shape constant `c`.
    pub c: f64,
    /// Domination constant `C`.
    #[serde(rename = "C")]
    pub big_c: f64,

    /// `M`, samples per batch.
    pub samples: usize,
    pub batches: usize,
    pub seed: u64,
    pub stream: u64,

    pub functional: FunctionalPreset,
    pub scale: f64,
    pub clip_level: f64,
    /// Known `E f(X_T)`; otherwise analytic when available, else a control run.
    pub reference_mean: Option<f64>,

    /// Radii for the concentration experiment; a default grid when absent.
    pub r_grid: Option<Vec<f64>>,
    pub r_points: usize,
    pub epsilons: Vec<f64>,

    /// Compute lower-bound constants (needs `rho0` and `beta`).
    pub lower: bool,
    pub rho0: Option<f64>,
    pub beta: Option<f64>,
    /// `|A|`; the full sphere when absent. For `d = 1`, 1 means `A = {+1}`.
    pub a_measure: Option<f64>,
    pub theta: Option<f64>,
    pub optimize_theta: bool,
    pub lambda_form: LambdaFormName,

    pub density_source: DensitySource,
    pub density_samples: usize,
    /// Bins (or grid points) with at least this fraction of the peak form the reported region.
    pub density_region_fraction: f64,
    /// Smallest admissible count in a reported bin.
    pub density_min_count: u64,
    pub fit: bool,
    /// Candidate shape constants for the fit; a log grid on `[0.2, 5]` when absent.
    pub c_grid: Option<Vec<f64>>,

    pub grid_points: usize,
    pub grid_sigmas: f64,
    pub r_max: usize,

    /// Target of the control problem, zeros when absent.
    pub x_prime: Option<Vec<f64>>,
    pub geodesic_steps: usize,

    /// Also write simulated samples as little-endian `f64`.
    pub binary: bool,

    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelPreset::Gaussian,
            case: CaseName::NonDegenerate,
            dim: 1,
            drift: 0.0,
            sigma: 1.0,
            drift_amplitude: 0.0,
            diffusion_amplitude: 0.0,
            friction: 0.0,
            lambda0: None,
            l0: None,
            eta: None,
            x0: None,
            horizon: 1.0,
            steps: 10,
            c: 1.0,
            big_c: 1.0,
            samples: 100,
            batches: 1,
            seed: 0,
            stream: 0,
            functional: FunctionalPreset::Identity,
            scale: 1.0,
            clip_level: 1.0,
            reference_mean: None,
            r_grid: None,
            r_points: 20,
            epsilons: vec![0.05, 0.01],
            lower: false,
            rho0: None,
            beta: None,
            a_measure: None,
            theta: None,
            optimize_theta: false,
            lambda_form: LambdaFormName::Reduced,
            density_source: DensitySource::Histogram,
            density_samples: 10_000_000,
            density_region_fraction: 0.1,
            density_min_count: 50,
            fit: true,
            c_grid: None,
            grid_points: 600,
            grid_sigmas: 10.0,
            r_max: 3,
            x_prime: None,
            geodesic_steps: 200,
            binary: false,
            out_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

/// Smallest sample count of a histogram density check.
pub const MIN_HISTOGRAM_SAMPLES: usize = 1_000_000;

impl ExperimentConfig {
    /// Reads a config file and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: Map<String, Value>) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| AppError::io(p, e))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(config_err!("{}: config must be a JSON object", p.display())),
                    Err(e) => return Err(config_err!("{}: {e}", p.display())),
                }
            }
            None => Map::new(),
        };
        doc.extend(overrides);
        let cfg: Self = serde_json::from_value(Value::Object(doc)).map_err(|e| config_err!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err!("{name} must be positive, got {v}"))
            }
        };
        if self.dim == 0 {
            return Err(config_err!("dim must be at least 1"));
        }
        if self.case == CaseName::Kinetic && !self.dim.is_multiple_of(2) {
            return Err(config_err!("kinetic models need an even dim, got {}", self.dim));
        }
        if self.model == ModelPreset::Langevin && self.case != CaseName::Kinetic {
            return Err(config_err!("the langevin preset needs case = kinetic"));
        }
        for (name, v) in [("x0", &self.x0), ("x_prime", &self.x_prime)] {
            if let Some(v) = v {
                if v.len() != self.dim {
                    return Err(config_err!("{name} has {} entries, dim is {}", v.len(), self.dim));
                }
                if v.iter().any(|a| !a.is_finite()) {
                    return Err(config_err!("{name} must be finite"));
                }
            }
        }
        positive("horizon", self.horizon)?;
        positive("c", self.c)?;
        positive("clip_level", self.clip_level)?;
        positive("grid_sigmas", self.grid_sigmas)?;
        if !(self.big_c >= 1.0 && self.big_c.is_finite()) {
            return Err(config_err!("C must be at least 1, got {}", self.big_c));
        }
        if self.steps == 0 || self.samples == 0 || self.batches == 0 {
            return Err(config_err!("steps, samples and batches must be at least 1"));
        }
        if !(self.scale.abs() <= 1.0) {
            return Err(config_err!("scale must lie in [-1, 1] so that f is 1-Lipschitz, got {}", self.scale));
        }
        if let Some(r) = &self.r_grid {
            if r.is_empty() || r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(config_err!("r_grid must be a non-empty list of non-negative radii"));
            }
        }
        if self.r_grid.is_none() && self.r_points < 2 {
            return Err(config_err!("r_points must be at least 2"));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 2.0)) {
            return Err(config_err!("epsilons must lie in (0, 2]"));
        }
        if let Some(v) = self.reference_mean {
            if !v.is_finite() {
                return Err(config_err!("reference_mean must be finite"));
            }
        }
        if !(self.density_region_fraction > 0.0 && self.density_region_fraction < 1.0) {
            return Err(config_err!("density_region_fraction must lie in (0, 1)"));
        }
        if self.density_min_count < 50 {
            return Err(config_err!("density_min_count must be at least 50, got {}", self.density_min_count));
        }
        if let Some(g) = &self.c_grid {
            if g.is_empty() || g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(config_err!("c_grid must be a non-empty list of positive values"));
            }
        }
        if self.threads == Some(0) {
            return Err(config_err!("threads must be at least 1"));
        }
        Ok(())
    }

    pub fn case_tag(&self) -> CaseTag {
        self.case.into()
    }

    pub fn start(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }

    pub fn target(&self) -> Vec<f64> {
        self.x_prime.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }

    /// SHA-256 of the config serialized in field order, ignoring `out_dir`
    /// and `threads` (they do not change results).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.threads = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses `key=value` pairs; values are JSON, falling back to a plain string.
pub fn parse_overrides<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for p in pairs {
        let (k, v) = p.split_once('=').ok_or_else(|| config_err!("override '{p}' is not of the form key=value"))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}
