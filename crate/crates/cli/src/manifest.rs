use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rhm_core::solver::{SolverConfig, StopRule};
use serde::{Deserialize, Serialize};

/// How the solver is started.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSource {
    Landmarks(PathBuf),
    Map(PathBuf),
    Fmap(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub alpha: f64,
    pub beta_slope: f64,
    pub beta_cap_iter: usize,
    pub gamma: f64,
    pub iters: usize,
    pub tol: f64,
    pub stop_rule: String,
    pub stationary_iters: usize,
    pub dim: usize,
    pub basis_k: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub cache_embedding: Option<PathBuf>,
}

impl MapConfig {
    pub fn solver(&self) -> Result<SolverConfig> {
        let stop = match self.stop_rule.as_str() {
            "relative" => StopRule::Relative,
            "absolute" => StopRule::Absolute,
            other => anyhow::bail!(rhm_core::Error::InvalidInput(format!("unknown stop rule {other:?}"))),
        };
        Ok(SolverConfig {
            alpha: self.alpha,
            beta_slope: self.beta_slope,
            beta_cap_iter: self.beta_cap_iter,
            gamma: self.gamma,
            max_iters: self.iters,
            tol: self.tol,
            stop,
            stationary_iters: self.stationary_iters,
            ..SolverConfig::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub p12: PathBuf,
    pub p21: PathBuf,
    pub trace: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub embedding_s: f64,
    pub init_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
}

/// Everything needed to repeat a `map` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub source: PathBuf,
    pub target: PathBuf,
    pub init: InitSource,
    pub config: MapConfig,
    pub outputs: Outputs,
    pub timings: Timings,
    pub iterations: usize,
    pub termination: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
