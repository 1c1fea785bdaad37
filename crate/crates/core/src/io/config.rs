//! Experiment configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorSpec, ElongationSource};
use crate::arm::{ArmModel, JointStop};
use crate::error::{Error, Result};

fn default_trials() -> u32 {
    10
}

fn default_phase() -> f64 {
    5.0
}

fn default_seed() -> u64 {
    7
}

/// Trial-to-trial variability and measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Gaussian marker position noise (cm).
    pub sigma_pos_cm: f64,
    /// Gaussian noise added to each acceleration sample (m/s²).
    pub sigma_acc_ms2: f64,
    /// Coefficient of variation of the supply flow between trials.
    pub flow_cv: f64,
    /// Coefficient of variation of the delivered elongation between trials.
    pub elongation_cv: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_pos_cm: 0.0,
            sigma_acc_ms2: 0.0,
            flow_cv: 0.03,
            elongation_cv: 0.03,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_pos_cm", self.sigma_pos_cm),
            ("sigma_acc_ms2", self.sigma_acc_ms2),
            ("flow_cv", self.flow_cv),
            ("elongation_cv", self.elongation_cv),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "noise.{name} = {v} must be finite and non-negative"
                )));
            }
        }
        if self.flow_cv >= 0.25 || self.elongation_cv >= 0.25 {
            return Err(Error::Validation("coefficients of variation must be below 0.25".into()));
        }
        Ok(())
    }
}

/// Optional replacements for individual [`ArmModel`] fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmOverrides {
    pub upper_arm_cm: Option<f64>,
    pub forearm_cm: Option<f64>,
    pub forearm_mass_kg: Option<f64>,
    pub passive_rom_deg: Option<f64>,
    pub attach_d_cm: Option<f64>,
    pub joint_stop: Option<JointStop>,
}

impl ArmOverrides {
    pub fn apply(&self, base: &ArmModel) -> ArmModel {
        ArmModel {
            upper_arm_cm: self.upper_arm_cm.unwrap_or(base.upper_arm_cm),
            forearm_cm: self.forearm_cm.unwrap_or(base.forearm_cm),
            forearm_mass_kg: self.forearm_mass_kg.unwrap_or(base.forearm_mass_kg),
            passive_rom_deg: self.passive_rom_deg.unwrap_or(base.passive_rom_deg),
            attach_d_cm: self.attach_d_cm.unwrap_or(base.attach_d_cm),
            joint_stop: self.joint_stop.unwrap_or(base.joint_stop),
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Variants as `shape,p,n`; empty means the 18 down-selected variants.
    #[serde(default)]
    pub variants: Vec<String>,
    #[serde(default)]
    pub arm: ArmOverrides,
    /// Pneumatic parameter file; the bundled calibration when absent.
    #[serde(default)]
    pub pneumatics: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default = "default_phase")]
    pub phase_s: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub elongation_source: ElongationSource,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variants: Vec::new(),
            arm: ArmOverrides::default(),
            pneumatics: None,
            trials: default_trials(),
            phase_s: default_phase(),
            seed: default_seed(),
            noise: NoiseConfig::default(),
            elongation_source: ElongationSource::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("experiment config: {e}")))?;
        cfg.validate_values()?;
        Ok(cfg)
    }

    /// Loads a config and resolves relative paths against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = cfg.pneumatics.take() {
            cfg.pneumatics = Some(if p.is_relative() { base.join(p) } else { p });
        }
        if let Some(p) = cfg.out_dir.take() {
            cfg.out_dir = Some(if p.is_relative() { base.join(p) } else { p });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate_values(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if !(self.phase_s > 0.0 && self.phase_s.is_finite()) {
            return Err(Error::Validation(format!(
                "phase_s = {} must be positive",
                self.phase_s
            )));
        }
        self.noise.validate()?;
        self.parsed_variants()?;
        Ok(())
    }

    /// Value checks plus existence of referenced files.
    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        if let Some(p) = &self.pneumatics {
            if !p.is_file() {
                return Err(Error::Validation(format!(
                    "pneumatic config {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn parsed_variants(&self) -> Result<Vec<ActuatorSpec>> {
        self.variants
            .iter()
            .map(|v| {
                let spec: ActuatorSpec = v.parse()?;
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}
