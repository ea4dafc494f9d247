//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fade_modfun::{EstimatorConfig, TrueModel};
use serde::{Deserialize, Serialize};

/// Default configuration with every key spelled out. Shown by `--help`.
pub const DEFAULT_TOML: &str = include_str!("default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TwoParam,
    ThreeParam,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::TwoParam => "two-param",
            Mode::ThreeParam => "three-param",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truth {
    pub nu: f64,
    pub d: f64,
    pub alpha: f64,
    pub length: f64,
    pub time: f64,
}

impl Default for Truth {
    fn default() -> Self {
        Self {
            nu: 0.5,
            d: 1.0,
            alpha: 1.8,
            length: 9.0,
            time: 1.0,
        }
    }
}

impl Truth {
    pub fn model(&self) -> TrueModel {
        TrueModel {
            nu: self.nu,
            d: self.d,
            alpha: self.alpha,
            length: self.length,
            time: self.time,
        }
    }
}

/// Estimator settings shared by every cell; `count` and `l1` come from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub offset: u32,
    pub alpha0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub step_clamp: f64,
    pub step_tol: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let base = EstimatorConfig::default();
        Self {
            offset: base.offset,
            alpha0: base.alpha0,
            epsilon: base.epsilon,
            max_iter: base.max_iter,
            step_clamp: base.step_clamp,
            step_tol: base.step_tol,
        }
    }
}

impl EstimatorSettings {
    pub fn config(&self, count: u32, l1: f64) -> EstimatorConfig {
        EstimatorConfig {
            l1,
            count,
            offset: self.offset,
            alpha0: self.alpha0,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            step_clamp: self.step_clamp,
            step_tol: self.step_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub noise_levels: Vec<f64>,
    pub n_list: Vec<u32>,
    pub l1_list: Vec<f64>,
    pub per_unit: Vec<f64>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub truth: Truth,
    pub estimator: EstimatorSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            mode: Mode::ThreeParam,
            output_dir: PathBuf::from("results"),
            noise_levels: vec![0.02],
            n_list: vec![7],
            l1_list: vec![9.0],
            per_unit: vec![3500.0],
            seeds: vec![0],
            jobs: 0,
            truth: Truth::default(),
            estimator: EstimatorSettings::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).context("parsing experiment config")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("noise_levels", self.noise_levels.is_empty()),
            ("n_list", self.n_list.is_empty()),
            ("l1_list", self.l1_list.is_empty()),
            ("per_unit", self.per_unit.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                bail!("{name} must not be empty");
            }
        }
        self.truth.model().validate()?;
        if self.truth.nu == 0.0 {
            bail!("truth.nu must be non-zero for relative errors");
        }
        if let Some(bad) = self
            .noise_levels
            .iter()
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            bail!("noise level {bad} must be a non-negative fraction");
        }
        if let Some(bad) = self.per_unit.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            bail!("per_unit {bad} must be positive");
        }
        if let Some(bad) = self
            .l1_list
            .iter()
            .find(|v| !(**v > 0.0 && **v <= self.truth.length))
        {
            bail!("L1 = {bad} must lie in (0, {}]", self.truth.length);
        }
        let min_count = match self.mode {
            Mode::TwoParam => 2,
            Mode::ThreeParam => 3,
        };
        if let Some(bad) = self.n_list.iter().find(|n| **n < min_count) {
            bail!(
                "{} mode needs at least {min_count} modulating functions, got {bad}",
                self.mode.as_str()
            );
        }
        if self.mode == Mode::ThreeParam {
            self.estimator
                .config(self.n_list[0], self.l1_list[0])
                .validate()?;
        } else if self.estimator.offset < 2 {
            bail!("estimator.offset must be at least 2");
        }
        Ok(())
    }
}
