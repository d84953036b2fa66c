//! Experiment configuration files.

use std::path::PathBuf;

use amdplab_core::hard::MAX_EPS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where trial instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    /// A model JSON file, the same for every trial.
    File { path: PathBuf },
    /// Lower-bound family. Without `seed` each trial draws its own planted
    /// arms; `gamma_lb` is the default when the grid leaves it empty.
    Hard {
        n: usize,
        k: usize,
        gamma_lb: f64,
        #[serde(default = "default_instance_eps")]
        eps: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Random mixing models, one per trial unless `seed` is given.
    Random {
        num_states: usize,
        actions: usize,
        beta: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_instance_eps() -> f64 {
    MAX_EPS
}

fn default_eps() -> Vec<f64> {
    vec![0.1]
}

fn default_delta() -> f64 {
    0.1
}

fn default_trials() -> u64 {
    1
}

/// Search for the smallest per-pair budget reaching a target gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSearch {
    pub target_gap: f64,
    #[serde(default = "default_lo")]
    pub lo: u64,
    pub hi: u64,
}

fn default_lo() -> u64 {
    1
}

/// Grid for the lower-bound harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerGrid {
    /// Instance gap parameters, each at most 1/32.
    pub eps: Vec<f64>,
    pub gamma_lb: Vec<f64>,
    /// Sample counts as multiples of the threshold `T`.
    pub t_multipliers: Vec<f64>,
    #[serde(default)]
    pub c_lb: Option<f64>,
    /// Full-instance trials per cell; 0 skips them.
    #[serde(default)]
    pub instance_trials: u64,
    #[serde(default = "default_lb_n")]
    pub n: usize,
    #[serde(default = "default_lb_k")]
    pub k: usize,
}

fn default_lb_n() -> usize {
    3
}

fn default_lb_k() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instance: Option<InstanceSource>,
    /// Target average-reward accuracies.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Mixing bounds handed to the solver; empty means measure per instance.
    #[serde(default)]
    pub t_mix: Vec<u64>,
    /// Restart parameters for hard instances; empty means the instance's own.
    #[serde(default)]
    pub gamma_lb: Vec<f64>,
    /// Fixed per-pair budgets; empty means the sample-budget formula.
    #[serde(default)]
    pub samples_per_pair: Vec<u64>,
    #[serde(default)]
    pub budget_search: Option<BudgetSearch>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub c_sample: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; `AMDPLAB_THREADS` takes precedence.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub lower: Option<LowerGrid>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    pub fn validate_upper(&self) -> CliResult<&InstanceSource> {
        let instance = self
            .instance
            .as_ref()
            .ok_or_else(|| CliError::validation("config: `instance` is required"))?;
        if self.trials == 0 {
            return Err(CliError::validation("config: trials must be at least 1"));
        }
        if self.eps.is_empty() {
            return Err(CliError::validation("config: eps grid is empty"));
        }
        if let Some(b) = &self.budget_search {
            if !self.samples_per_pair.is_empty() {
                return Err(CliError::validation(
                    "config: budget_search and samples_per_pair are mutually exclusive",
                ));
            }
            if b.lo == 0 || b.lo > b.hi {
                return Err(CliError::validation("config: budget_search needs 1 <= lo <= hi"));
            }
        }
        if !self.gamma_lb.is_empty() && !matches!(instance, InstanceSource::Hard { .. }) {
            return Err(CliError::validation("config: gamma_lb grid applies to hard instances only"));
        }
        Ok(instance)
    }

    pub fn validate_lower(&self) -> CliResult<&LowerGrid> {
        let grid = self
            .lower
            .as_ref()
            .ok_or_else(|| CliError::validation("config: `lower` grid is required"))?;
        if self.trials == 0 {
            return Err(CliError::validation("config: trials must be at least 1"));
        }
        if grid.eps.is_empty() || grid.gamma_lb.is_empty() || grid.t_multipliers.is_empty() {
            return Err(CliError::validation("config: lower grids must be nonempty"));
        }
        if grid.t_multipliers.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(CliError::validation("config: t_multipliers must be finite and nonnegative"));
        }
        Ok(grid)
    }
}
