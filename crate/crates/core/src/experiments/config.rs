//! Experiment configuration: one TOML (or JSON) document per run.
//!
//! ```toml
//! schema_version = 1
//! experiment = "bandit"
//! systems = ["A1", "A2", "A3", "A4"]
//! horizon = 300
//! seeds = [0, 1, 2]
//! noise = { kind = "box", lower = [-1, -1, -1, -1], upper = [1, 1, 1, 1] }
//! ```
//!
//! System names resolve first against `[matrices]` entries and then
//! against the built-in `A1`..`A4`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::error::{Error, Result};
use crate::estimators::{ErrorMetric, Loss, DEFAULT_RIDGE};
use crate::noise::NoiseSet;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEEDS: u64 = 10;
pub const COMPARE_HORIZON: usize = 200;
pub const BANDIT_HORIZON: usize = 300;
pub const DEFAULT_CHECKPOINTS: [usize; 8] = [2, 5, 10, 25, 50, 100, 150, 200];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CompareOls,
    Bandit,
    Simulate,
    Estimate,
    Spectral,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::CompareOls => "compare-ols",
            ExperimentKind::Bandit => "bandit",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Estimate => "estimate",
            ExperimentKind::Spectral => "spectral",
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEEDS).collect()
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

fn default_loss() -> Loss {
    Loss::Squared
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    /// Subsystem names in arm order. Empty means the experiment's default.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<String>,
    /// Inline matrices, row-major.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, Vec<Vec<f64>>>,
    /// Defaults to `[-1, 1]^d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub error_metric: ErrorMetric,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_loss")]
    pub loss: Loss,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    /// 1-based switching sequence for `simulate`; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switches: Option<Vec<usize>>,
    /// Trajectory CSV read by `estimate`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            systems: Vec::new(),
            matrices: BTreeMap::new(),
            noise: None,
            horizon: None,
            seeds: default_seeds(),
            error_metric: ErrorMetric::Frobenius,
            checkpoints: Vec::new(),
            output_dir: None,
            loss: Loss::Squared,
            ridge: DEFAULT_RIDGE,
            switches: None,
            trajectory: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML. A relative
    /// `trajectory` path is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if let (Some(traj), Some(dir)) = (cfg.trajectory.as_mut(), path.parent()) {
            if traj.is_relative() {
                *traj = dir.join(&*traj);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Config("ridge must be a finite value >= 0".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) || self.checkpoints.first() == Some(&0)
        {
            return Err(Error::Config(
                "checkpoints must be positive and strictly increasing".into(),
            ));
        }
        let systems = self.systems()?;
        let d = systems.first().map_or(0, |(_, a)| a.nrows());
        if let Some(noise) = &self.noise {
            noise.validate()?;
            if d > 0 && noise.dim() != d {
                return Err(Error::Config(format!(
                    "noise set has dimension {}, matrices have {d}",
                    noise.dim()
                )));
            }
        }
        if let Some(sw) = &self.switches {
            if let Some(bad) = sw.iter().find(|&&a| a == 0 || a > systems.len()) {
                return Err(Error::Config(format!(
                    "switch {bad} outside 1..={}",
                    systems.len()
                )));
            }
        }
        if self.experiment == ExperimentKind::Estimate && self.trajectory.is_none() {
            return Err(Error::Config(
                "estimate needs a `trajectory` csv path".into(),
            ));
        }
        Ok(())
    }

    fn default_system_names(&self) -> Vec<String> {
        let names: &[&str] = match self.experiment {
            ExperimentKind::CompareOls => &["A2"],
            ExperimentKind::Bandit | ExperimentKind::Simulate | ExperimentKind::Spectral => {
                &["A1", "A2", "A3", "A4"]
            }
            ExperimentKind::Estimate => &[],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Resolved `(name, matrix)` pairs in arm order.
    pub fn systems(&self) -> Result<Vec<(String, DMatrix<f64>)>> {
        let names = if self.systems.is_empty() {
            self.default_system_names()
        } else {
            self.systems.clone()
        };
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let m = match self.matrices.get(&name) {
                Some(rows) => matrix_from_rows(&name, rows)?,
                None => builtin::by_name(&name)
                    .ok_or_else(|| Error::Config(format!("unknown matrix '{name}'")))?,
            };
            out.push((name, m));
        }
        if let Some((_, first)) = out.first() {
            let d = first.nrows();
            if let Some((name, _)) = out.iter().find(|(_, m)| m.nrows() != d) {
                return Err(Error::Config(format!("matrix '{name}' is not {d}x{d}")));
            }
        }
        Ok(out)
    }

    pub fn noise_set(&self, d: usize) -> Result<NoiseSet> {
        match &self.noise {
            Some(n) => Ok(n.clone()),
            None => NoiseSet::symmetric_box(d, 1.0),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(match self.experiment {
            ExperimentKind::CompareOls => {
                self.checkpoints.last().copied().unwrap_or(COMPARE_HORIZON)
            }
            ExperimentKind::Bandit => BANDIT_HORIZON,
            _ => COMPARE_HORIZON,
        })
    }

    /// Checkpoints not beyond the horizon.
    pub fn checkpoints(&self) -> Vec<usize> {
        let h = self.horizon();
        let base: Vec<usize> = if self.checkpoints.is_empty() {
            DEFAULT_CHECKPOINTS.to_vec()
        } else {
            self.checkpoints.clone()
        };
        base.into_iter().filter(|&n| n <= h).collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!(
            "matrix '{name}' must be square and nonempty"
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!(
            "matrix '{name}' has non-finite entries"
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}
