//! Experiment configuration files.
//!
//! A config is a JSON object whose `mode` field selects the experiment. Every
//! struct rejects unknown fields, and the parsed value (defaults filled in) is
//! echoed into the JSON sidecar of each run.

use std::path::{Path, PathBuf};

use cavmag_core::oracles::FockModel;
use cavmag_core::sweep::{self, EvalTime};
use cavmag_core::{CriticalModel, RwaModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        if self.count == 0 {
            return Err(CliError::Config(format!("{field}: count must be at least 1 (grid is empty)")));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!("{field}: start and stop must be finite")));
        }
        if self.count > 1 && !(self.stop > self.start) {
            return Err(CliError::Config(format!("{field}: stop must exceed start")));
        }
        let built = match self.spacing {
            Spacing::Linear => sweep::linear_grid(self.start, self.stop, self.count),
            Spacing::Geometric => sweep::geometric_grid(self.start, self.stop, self.count),
        };
        built.map_err(|e| CliError::Config(format!("{field}: {e}")))
    }

    fn non_negative(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let v = self.values(field)?;
        if v[0] < 0.0 {
            return Err(CliError::Config(format!("{field}: values must be ≥ 0")));
        }
        Ok(v)
    }
}

/// Which RWA input a `sweep-hl` run varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweepVariable {
    #[default]
    #[serde(rename = "r0")]
    R0,
    #[serde(rename = "B_x")]
    Bx,
}

fn t_star() -> EvalTime {
    EvalTime::TStar
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwaRun {
    pub model: RwaModel,
    pub t_grid: Grid,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalRun {
    pub model: CriticalModel,
    pub t_grid: Grid,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HlSweep {
    /// Base model; the swept field overrides its `r0` or `B_x`.
    pub model: RwaModel,
    #[serde(default)]
    pub vary: SweepVariable,
    pub grid: Grid,
    #[serde(default = "t_star")]
    pub eval: EvalTime,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalSweepRun {
    pub omega_c: f64,
    pub omega_m: f64,
    /// Relative distances `(g_c − g)/g_c`.
    pub gap_grid: Grid,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuCheck {
    pub nu: f64,
    pub r_grid: Grid,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Oracle {
    /// Truncated Fock space. The RWA run starts from the model's `r0`; the
    /// critical run starts from the joint vacuum.
    Fock {
        model: FockModel,
        #[serde(default)]
        cutoff: Option<usize>,
        #[serde(default)]
        tail_tolerance: Option<f64>,
    },
    /// Moment equations of the dissipative RWA model.
    Lyapunov { model: RwaModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheck {
    pub oracle: Oracle,
    pub t_grid: Grid,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Rwa(RwaRun),
    Critical(CriticalRun),
    SweepHl(HlSweep),
    SweepCritical(CriticalSweepRun),
    NuCheck(NuCheck),
    OracleCheck(OracleCheck),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        if let Some(out) = cfg.output() {
            let sidecar = out.with_extension("json");
            let same = match (std::fs::canonicalize(&sidecar), std::fs::canonicalize(path)) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            };
            if same {
                return Err(CliError::Config(format!(
                    "output: the sidecar {} would overwrite the config file",
                    sidecar.display()
                )));
            }
        }
        Ok(cfg)
    }

    /// Primary CSV path; its sidecar shares the stem.
    pub fn output(&self) -> Option<&Path> {
        match self {
            Self::Rwa(c) => Some(&c.output),
            Self::Critical(c) => Some(&c.output),
            Self::SweepHl(c) => Some(&c.output),
            Self::SweepCritical(c) => Some(&c.output),
            Self::NuCheck(c) => Some(&c.output),
            Self::OracleCheck(c) => c.output.as_deref(),
        }
    }

    /// Checks everything that can be checked without running the experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        let model_err = |field: &str, e: cavmag_core::Error| CliError::Config(format!("{field}: {e}"));
        match self {
            Self::Rwa(c) => {
                c.model.validate().map_err(|e| model_err("model", e))?;
                c.t_grid.non_negative("t_grid")?;
            }
            Self::Critical(c) => {
                c.model.validate().map_err(|e| model_err("model", e))?;
                c.t_grid.non_negative("t_grid")?;
            }
            Self::SweepHl(c) => {
                c.model.validate().map_err(|e| model_err("model", e))?;
                let v = c.grid.non_negative("grid")?;
                let min = match c.vary {
                    SweepVariable::R0 => 8,
                    SweepVariable::Bx => 3,
                };
                if v.len() < min {
                    return Err(CliError::Config(format!("grid: count must be at least {min}")));
                }
                if c.model.g <= 0.0 && !matches!(c.eval, EvalTime::Fixed(_)) {
                    return Err(CliError::Config("eval: t* needs g > 0".into()));
                }
                if c.vary == SweepVariable::Bx && matches!(c.eval, EvalTime::CfiPeak { .. }) {
                    return Err(CliError::Config(
                        "eval: cfi_peak is undefined for displaced states (vary = B_x)".into(),
                    ));
                }
                if let EvalTime::CfiPeak { lo, hi, grid_n } = c.eval {
                    if !(lo > 0.0 && hi > lo) || grid_n < 16 {
                        return Err(CliError::Config("eval.cfi_peak: need 0 < lo < hi and grid_n ≥ 16".into()));
                    }
                }
            }
            Self::SweepCritical(c) => {
                let v = c.gap_grid.values("gap_grid")?;
                if v.len() < 3 || v.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
                    return Err(CliError::Config("gap_grid: need at least 3 values in (0, 1)".into()));
                }
                CriticalModel::near_critical(c.omega_c, c.omega_m, v[0]).map_err(|e| model_err("omega_c/omega_m", e))?;
            }
            Self::NuCheck(c) => {
                if !(c.nu >= 0.0) {
                    return Err(CliError::Config("nu: must be ≥ 0".into()));
                }
                let v = c.r_grid.values("r_grid")?;
                if v.len() < 3 || v[0] <= 0.0 {
                    return Err(CliError::Config("r_grid: need at least 3 positive values".into()));
                }
            }
            Self::OracleCheck(c) => {
                c.t_grid.non_negative("t_grid")?;
                match &c.oracle {
                    Oracle::Fock { model, cutoff, tail_tolerance } => {
                        match model {
                            FockModel::Rwa(m) => m.validate().map_err(|e| model_err("oracle.model", e))?,
                            FockModel::Critical(m) => m.validate().map_err(|e| model_err("oracle.model", e))?,
                        }
                        if let FockModel::Rwa(m) = model {
                            if m.kappa != 0.0 {
                                return Err(CliError::Config("oracle.model: the Fock oracle needs kappa = 0".into()));
                            }
                        }
                        if matches!(cutoff, Some(n) if *n < 2) {
                            return Err(CliError::Config("oracle.cutoff: must be at least 2".into()));
                        }
                        if matches!(tail_tolerance, Some(t) if !(*t > 0.0)) {
                            return Err(CliError::Config("oracle.tail_tolerance: must be positive".into()));
                        }
                    }
                    Oracle::Lyapunov { model } => model.validate().map_err(|e| model_err("oracle.model", e))?,
                }
            }
        }
        Ok(())
    }
}
