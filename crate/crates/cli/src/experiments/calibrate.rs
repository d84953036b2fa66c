//! Doubling search for the sample-budget constant.

use amdplab_core::exec::derive_seed;
use amdplab_core::hard::HardInstanceSpec;
use amdplab_core::mdp::{exact_dmdp_optimal, model_mixing_time, policy_discounted_values};
use amdplab_core::reduction::{reduction_parameters, solve_amdp_on, AmdpOptions};
use amdplab_core::solver::sample_budget_raw;
use amdplab_core::Exec;
use serde::{Deserialize, Serialize};

use super::MIXING_MAX_T;
use crate::error::{CliError, CliResult};
use crate::experiments::upper::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n: usize,
    pub k: usize,
    pub gamma_lb: f64,
    pub instance_eps: f64,
    pub instance_seed: u64,
    /// Average-reward accuracy handed to the reduction.
    pub eps: f64,
    pub delta: f64,
    pub seeds: u64,
    pub master_seed: u64,
    /// Doublings allowed above the starting constant.
    pub max_doublings: u32,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            n: 3,
            k: 3,
            gamma_lb: 0.8,
            instance_eps: 1.0 / 32.0,
            instance_seed: 0,
            eps: 0.1,
            delta: 0.1,
            seeds: 50,
            master_seed: 0,
            max_doublings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub c_sample: f64,
    pub samples_per_pair: u64,
    pub successes: u64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub t_mix: usize,
    pub gamma: f64,
    pub eps_dmdp: f64,
    pub required_successes: u64,
    /// Smallest power of two that met the success criterion.
    pub c_sample: Option<f64>,
    /// The criterion already held at the one-sample floor, so the search
    /// says nothing about how large the constant must be.
    pub degenerate: bool,
    pub steps: Vec<CalibrationStep>,
}

/// Starts at the largest power of two whose budget rounds up to one sample
/// per pair and doubles until at least `⌈(1−δ)·seeds⌉` seeds return a
/// policy whose true discounted values are within `ε_dmdp` of optimal in
/// every state.
pub fn calibrate(config: &CalibrationConfig, exec: Exec) -> CliResult<CalibrationReport> {
    if config.seeds == 0 {
        return Err(CliError::validation("calibrate: seeds must be positive"));
    }
    let spec = HardInstanceSpec::random(config.n, config.k, config.gamma_lb, config.instance_eps, config.instance_seed)?;
    let inst = Instance::hard(spec)?;
    let t_mix = model_mixing_time(&inst.model, MIXING_MAX_T)?.report.mixing_time;
    let params = reduction_parameters(config.eps, t_mix as u64, config.delta)?;
    let (_, v_star) = exact_dmdp_optimal(&inst.model, params.gamma, params.eps_dmdp / 100.0)?;
    let required = ((1.0 - config.delta) * config.seeds as f64).ceil() as u64;

    let unit = sample_budget_raw(&params.solver_config(1.0)?, inst.model.total_actions());
    let mut c = 2f64.powi(-(unit.log2().ceil() as i32));
    let mut steps = Vec::new();
    for _ in 0..=config.max_doublings {
        let outcomes = exec.map(config.seeds as usize, |s| -> CliResult<(u64, bool)> {
            let opts = AmdpOptions {
                c_sample: c,
                samples_per_pair: None,
                exec: Exec::Sequential,
            };
            let seed = derive_seed(config.master_seed, &[s as u64]);
            let (report, _) = solve_amdp_on(&inst.model, &params, opts, seed)?;
            let v = policy_discounted_values(&inst.model, &report.policy, params.gamma, false)?;
            let ok = v.values.iter().zip(&v_star.values).all(|(a, b)| *a >= b - params.eps_dmdp);
            Ok((report.samples_per_pair, ok))
        });
        let outcomes = outcomes.into_iter().collect::<CliResult<Vec<_>>>()?;
        let successes = outcomes.iter().filter(|o| o.1).count() as u64;
        let passed = successes >= required;
        steps.push(CalibrationStep {
            c_sample: c,
            samples_per_pair: outcomes[0].0,
            successes,
            passed,
        });
        if passed {
            return Ok(CalibrationReport {
                config: config.clone(),
                t_mix,
                gamma: params.gamma,
                eps_dmdp: params.eps_dmdp,
                required_successes: required,
                c_sample: Some(c),
                degenerate: steps.len() == 1,
                steps,
            });
        }
        c *= 2.0;
    }
    Ok(CalibrationReport {
        config: config.clone(),
        t_mix,
        gamma: params.gamma,
        eps_dmdp: params.eps_dmdp,
        required_successes: required,
        c_sample: None,
        degenerate: false,
        steps,
    })
}
