//! Plug-in discounted solver: sample budget, reward perturbation, and value
//! iteration on the empirical model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::mdp::{value_iteration, DeterministicPolicy, MdpModel, DEFAULT_VI_MAX_ITERS};
use crate::sampling::{empirical_model_for, SampleSet};

/// Constant in front of the sample-budget formula. The `calibrate`
/// subcommand searches for the smallest power of two that meets the
/// success rate on a given instance; this default leaves the formula
/// unscaled.
pub const DEFAULT_C_SAMPLE: f64 = 1.0;

/// Stream tag separating the reward-perturbation seed from the sampling
/// streams of the same master seed.
const PERTURB_STREAM: u64 = 0x7065_7274;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub gamma: f64,
    /// Target accuracy in unrescaled value units.
    pub eps_dmdp: f64,
    pub delta: f64,
    pub c_sample: f64,
    /// Half-width of the reward perturbation.
    pub xi: f64,
    pub vi_tol: f64,
    pub max_iters: usize,
}

impl SolverConfig {
    /// Defaults: `ξ = ε(1−γ)/8`, `vi_tol = ε/100`.
    pub fn new(gamma: f64, eps_dmdp: f64, delta: f64) -> Result<Self> {
        let cfg = SolverConfig {
            gamma,
            eps_dmdp,
            delta,
            c_sample: DEFAULT_C_SAMPLE,
            xi: eps_dmdp * (1.0 - gamma) / 8.0,
            vi_tol: eps_dmdp / 100.0,
            max_iters: DEFAULT_VI_MAX_ITERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_c_sample(mut self, c: f64) -> Result<Self> {
        self.c_sample = c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::range("gamma", self.gamma, "[0, 1)"));
        }
        if !(self.eps_dmdp > 0.0) || self.eps_dmdp > 1.0 / (1.0 - self.gamma) {
            return Err(Error::range(
                "eps_dmdp",
                self.eps_dmdp,
                format!("(0, 1/(1-gamma)] = (0, {}]", 1.0 / (1.0 - self.gamma)),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::range("delta", self.delta, "(0, 1)"));
        }
        if !(self.c_sample > 0.0) || !self.c_sample.is_finite() {
            return Err(Error::range("c_sample", self.c_sample, "(0, inf)"));
        }
        if !(self.xi >= 0.0) {
            return Err(Error::range("xi", self.xi, "[0, inf)"));
        }
        if !(self.vi_tol > 0.0) {
            return Err(Error::range("vi_tol", self.vi_tol, "(0, inf)"));
        }
        if self.max_iters == 0 {
            return Err(Error::validation("solver config", "max_iters must be positive"));
        }
        Ok(())
    }
}

/// Un-rounded budget `C·ln(A/((1−γ)εδ)) / ((1−γ)³ε²)`.
pub fn sample_budget_raw(config: &SolverConfig, total_actions: usize) -> f64 {
    let one_minus = 1.0 - config.gamma;
    let log_term = (total_actions as f64 / (one_minus * config.eps_dmdp * config.delta)).ln();
    config.c_sample * log_term / (one_minus.powi(3) * config.eps_dmdp.powi(2))
}

/// Per-pair sample count `N = ⌈C·ln(A_tot/((1−γ)εδ)) / ((1−γ)³ε²)⌉`,
/// at least 1.
pub fn required_samples_per_pair(config: &SolverConfig, total_actions: usize) -> Result<u64> {
    config.validate()?;
    if total_actions == 0 {
        return Err(Error::validation("total_actions", "must be positive"));
    }
    let raw = sample_budget_raw(config, total_actions);
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::range("samples_per_pair", raw, "representable as u64"));
    }
    Ok((raw.ceil() as u64).max(1))
}

/// Adds an independent `U[0, ξ]` draw to every reward and clamps to
/// `[0, 1 + ξ]`.
pub fn perturb_rewards(rewards: &[f64], xi: f64, seed: u64) -> Vec<f64> {
    if xi == 0.0 {
        return rewards.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rewards
        .iter()
        .map(|&r| (r + xi * rng.random::<f64>()).clamp(0.0, 1.0 + xi))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PluginSolution {
    pub policy: DeterministicPolicy,
    /// Fixed point of the perturbed empirical model.
    pub empirical_values: Vec<f64>,
    pub perturbed_rewards: Vec<f64>,
    pub empirical_model: MdpModel,
    pub iterations: usize,
}

/// Builds `P̂` from the samples, perturbs the rewards with a seed derived
/// from the sample set's master seed, and returns the greedy policy of the
/// empirical discounted problem.
///
/// The budget precondition (`N ≥ required_samples_per_pair`) is the
/// caller's; budget sweeps deliberately run below it.
pub fn solve_dmdp_plugin(model: &MdpModel, samples: &SampleSet, config: &SolverConfig) -> Result<PluginSolution> {
    config.validate()?;
    let empirical = empirical_model_for(samples, model)?;
    let rewards = perturb_rewards(
        model.rewards(),
        config.xi,
        derive_seed(samples.master_seed, &[PERTURB_STREAM]),
    );
    let run = value_iteration(&empirical, &rewards, config.gamma, config.vi_tol, config.max_iters)?;
    Ok(PluginSolution {
        policy: run.policy,
        empirical_values: run.values,
        perturbed_rewards: rewards,
        empirical_model: empirical,
        iterations: run.iterations,
    })
}
