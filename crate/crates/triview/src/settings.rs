//! Effective run parameters and their JSON snapshot.

use std::path::Path;

use serde::{Deserialize, Serialize};
use triview_core::{LossConfig, LossWeights, Mode, RefineConfig};

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Stereo,
    Multiscopic,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Stereo => Mode::Stereo,
            ModeName::Multiscopic => Mode::Multiscopic,
        }
    }
}

impl ModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::Stereo => "stereo",
            ModeName::Multiscopic => "multiscopic",
        }
    }
}

/// How the cost volume is turned into the initial disparities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// Winner-take-all with parabolic sub-pixel fit.
    Wta,
    /// Softmax-weighted mean over disparities at temperature `tau`.
    SoftArgmin,
}

/// Every parameter that influences a run. Serialized verbatim to
/// `config.json`, and accepted back through `run --config`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub mode: ModeName,
    pub init: InitMethod,
    pub d_max: usize,
    pub tau: f64,
    pub iterations: usize,
    pub pyramid_levels: usize,
    pub lr_d: f64,
    pub lr_s: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub ssim_window: usize,
    pub ssim_c1: f64,
    pub ssim_c2: f64,
    pub gamma: f64,
    pub k_discontinuity: f64,
    pub disc_threshold: f64,
    pub t_sigma: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        let r = RefineConfig::default();
        let w = r.weights;
        let l = r.loss_cfg;
        Self {
            mode: ModeName::Multiscopic,
            init: InitMethod::Wta,
            d_max: r.d_max as usize,
            tau: 0.05,
            iterations: r.iterations,
            pyramid_levels: r.pyramid_levels,
            lr_d: r.lr_d,
            lr_s: r.lr_s,
            adam_beta1: r.adam_beta1,
            adam_beta2: r.adam_beta2,
            adam_eps: r.adam_eps,
            lambda1: w.lambda1,
            lambda2: w.lambda2,
            lambda3: w.lambda3,
            lambda4: w.lambda4,
            ssim_window: l.ssim_window,
            ssim_c1: l.ssim_c1,
            ssim_c2: l.ssim_c2,
            gamma: l.gamma,
            k_discontinuity: l.k_discontinuity,
            disc_threshold: l.disc_threshold,
            t_sigma: l.t_sigma,
        }
    }
}

impl RunSettings {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            ssim_window: self.ssim_window,
            ssim_c1: self.ssim_c1,
            ssim_c2: self.ssim_c2,
            gamma: self.gamma,
            k_discontinuity: self.k_discontinuity,
            disc_threshold: self.disc_threshold,
            t_sigma: self.t_sigma,
        }
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            iterations: self.iterations,
            pyramid_levels: self.pyramid_levels,
            lr_d: self.lr_d,
            lr_s: self.lr_s,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            d_max: self.d_max as f64,
            mode: self.mode.into(),
            weights: LossWeights {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                lambda3: self.lambda3,
                lambda4: self.lambda4,
            },
            loss_cfg: self.loss_config(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 {
            return Err(invalid("d_max must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau must be positive"));
        }
        self.refine_config().validate()?;
        Ok(())
    }

    /// Names of the fields that differ from the defaults, in declaration
    /// order.
    pub fn overridden(&self) -> Vec<String> {
        let current = field_map(self);
        let defaults = field_map(&Self::default());
        current
            .into_iter()
            .filter(|(k, v)| defaults.get(k) != Some(v))
            .map(|(k, _)| k)
            .collect()
    }
}

fn invalid(msg: &str) -> Error {
    Error::Core(triview_core::Error::InvalidArgument(msg.into()))
}

fn field_map(s: &RunSettings) -> serde_json::Map<String, serde_json::Value> {
    match serde_json::to_value(s) {
        Ok(serde_json::Value::Object(m)) => m,
        _ => unreachable!("RunSettings serializes to an object"),
    }
}

/// Contents of `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub settings: RunSettings,
    pub overridden: Vec<String>,
}

impl ConfigSnapshot {
    pub fn new(settings: RunSettings) -> Self {
        Self {
            overridden: settings.overridden(),
            settings,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = error::read(path)?;
        serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
