//! Average-reward solving by way of a discounted surrogate.
//!
//! For a model whose policies all mix within `t_mix` steps, a discount of
//! `γ = 1 − ε/(9·t_mix)` makes rescaled discounted values and gains agree to
//! within `ε/3`, so an `ε/(3(1−γ))`-optimal discounted policy is
//! `ε`-optimal for the average reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mdp::{average_values, induce_chain, mixing_time, policy_discounted_values, DeterministicPolicy, MdpModel, Policy};
use crate::sampling::{oblivious_batch_from, GenerativeModel, QueryLedger, SamplePlan};
use crate::solver::{required_samples_per_pair, solve_dmdp_plugin, SolverConfig, DEFAULT_C_SAMPLE};

/// Ceiling on `t` when measuring mixing times inside the closeness check.
pub const CLOSENESS_MAX_T: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub eps: f64,
    pub t_mix: u64,
    pub delta: f64,
    pub gamma: f64,
    /// Unrescaled accuracy handed to the discounted solver, `3·t_mix`.
    pub eps_dmdp: f64,
    /// `ε/3`, the same accuracy on the rescaled scale.
    pub eps_rescaled: f64,
}

pub fn reduction_parameters(eps: f64, t_mix: u64, delta: f64) -> Result<ReductionParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::range("eps", eps, "(0, 1)"));
    }
    if t_mix == 0 {
        return Err(Error::validation("t_mix", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::range("delta", delta, "(0, 1)"));
    }
    let t = t_mix as f64;
    Ok(ReductionParams {
        eps,
        t_mix,
        delta,
        gamma: 1.0 - eps / (9.0 * t),
        eps_dmdp: 3.0 * t,
        eps_rescaled: eps / 3.0,
    })
}

impl ReductionParams {
    pub fn solver_config(&self, c_sample: f64) -> Result<SolverConfig> {
        SolverConfig::new(self.gamma, self.eps_dmdp, self.delta)?.with_c_sample(c_sample)
    }
}

/// Knobs for [`solve_amdp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdpOptions {
    pub c_sample: f64,
    /// Fixed per-pair count in place of the formula, for budget sweeps.
    pub samples_per_pair: Option<u64>,
    pub exec: Exec,
}

impl Default for AmdpOptions {
    fn default() -> Self {
        AmdpOptions {
            c_sample: DEFAULT_C_SAMPLE,
            samples_per_pair: None,
            exec: Exec::default(),
        }
    }
}

/// Everything the pipeline derived on the way to its policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmdpReport {
    pub params: ReductionParams,
    pub c_sample: f64,
    pub samples_per_pair: u64,
    pub total_samples: u64,
    pub vi_iterations: usize,
    pub policy: DeterministicPolicy,
}

/// Runs the pipeline with default options.
pub fn solve_amdp(gm: &GenerativeModel<'_>, eps: f64, delta: f64, t_mix: u64, master_seed: u64) -> Result<AmdpReport> {
    let params = reduction_parameters(eps, t_mix, delta)?;
    solve_amdp_with(gm, &params, AmdpOptions::default(), master_seed)
}

pub fn solve_amdp_with(
    gm: &GenerativeModel<'_>,
    params: &ReductionParams,
    options: AmdpOptions,
    master_seed: u64,
) -> Result<AmdpReport> {
    let model = gm.model();
    let config = params.solver_config(options.c_sample)?;
    let n = match options.samples_per_pair {
        Some(n) => n,
        None => required_samples_per_pair(&config, model.total_actions())?,
    };
    let before = gm.ledger().total_queries;
    let samples = oblivious_batch_from(gm, SamplePlan::new(n), master_seed, options.exec);
    let used = gm.ledger().total_queries - before;
    let solution = solve_dmdp_plugin(model, &samples, &config)?;
    Ok(AmdpReport {
        params: *params,
        c_sample: options.c_sample,
        samples_per_pair: n,
        total_samples: used,
        vi_iterations: solution.iterations,
        policy: solution.policy,
    })
}

/// Convenience wrapper returning the ledger of a fresh generative model.
pub fn solve_amdp_on(model: &MdpModel, params: &ReductionParams, options: AmdpOptions, master_seed: u64) -> Result<(AmdpReport, QueryLedger)> {
    let gm = GenerativeModel::new(model);
    let report = solve_amdp_with(&gm, params, options, master_seed)?;
    Ok((report, gm.ledger()))
}

/// `‖V^π·1 − (1−γ)v^π_γ‖_∞`.
pub fn closeness_gap<P: Policy + ?Sized>(model: &MdpModel, policy: &P, gamma: f64) -> Result<f64> {
    let avg = average_values(model, policy)?;
    let disc = policy_discounted_values(model, policy, gamma, true)?;
    Ok(avg.max_abs_diff(&disc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessCheck {
    pub gap: f64,
    pub t_mix: usize,
    /// `3(1−γ)·t_mix`.
    pub bound: f64,
    pub holds: bool,
}

/// Compares [`closeness_gap`] with `3(1−γ)·t_mix`, measuring `t_mix` on the
/// policy's own chain.
pub fn check_closeness<P: Policy + ?Sized>(model: &MdpModel, policy: &P, gamma: f64) -> Result<ClosenessCheck> {
    let chain = induce_chain(model, policy)?;
    let t_mix = mixing_time(&chain, CLOSENESS_MAX_T)?.mixing_time;
    let gap = closeness_gap(model, policy, gamma)?;
    let bound = 3.0 * (1.0 - gamma) * t_mix as f64;
    Ok(ClosenessCheck {
        gap,
        t_mix,
        bound,
        holds: gap <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn worked_parameter_examples() {
        let p = reduction_parameters(0.09, 10, 0.1).unwrap();
        assert_abs_diff_eq!(p.gamma, 0.999, epsilon = 1e-15);
        assert_eq!(p.eps_dmdp, 30.0);
        let p = reduction_parameters(0.9, 1, 0.1).unwrap();
        assert_abs_diff_eq!(p.gamma, 0.9, epsilon = 1e-15);
        assert_eq!(p.eps_dmdp, 3.0);
    }

    #[test]
    fn parameter_ranges() {
        assert!(reduction_parameters(1.0, 1, 0.1).is_err());
        assert!(reduction_parameters(0.0, 1, 0.1).is_err());
        assert!(reduction_parameters(0.5, 0, 0.1).is_err());
        assert!(reduction_parameters(0.5, 1, 0.0).is_err());
    }

    #[test]
    fn single_action_model_any_budget() {
        let m = MdpModel::new(2, vec![1, 1], vec![vec![0.5, 0.5]; 2], vec![0.3, 0.6]).unwrap();
        let params = reduction_parameters(0.5, 1, 0.1).unwrap();
        for n in [1, 10] {
            let opts = AmdpOptions {
                samples_per_pair: Some(n),
                ..AmdpOptions::default()
            };
            let (report, _) = solve_amdp_on(&m, &params, opts, 3).unwrap();
            assert_eq!(report.policy.action_index, vec![0, 0]);
        }
    }

    #[test]
    fn sample_accounting() {
        let m = MdpModel::new(2, vec![2, 1], vec![vec![0.5, 0.5]; 3], vec![0.3, 0.6, 0.2]).unwrap();
        let params = reduction_parameters(0.9, 1, 0.1).unwrap();
        let opts = AmdpOptions {
            c_sample: 1e-3,
            ..AmdpOptions::default()
        };
        let (report, ledger) = solve_amdp_on(&m, &params, opts, 5).unwrap();
        let expected = required_samples_per_pair(&params.solver_config(1e-3).unwrap(), 3).unwrap();
        assert_eq!(report.samples_per_pair, expected);
        assert_eq!(report.total_samples, expected * 3);
        assert_eq!(ledger.total_queries, report.total_samples);
    }

    #[test]
    fn closeness_on_constant_and_two_state_chains() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.7]).unwrap();
        let pi = DeterministicPolicy::new(vec![0]);
        for g in [0.0, 0.5, 0.99] {
            assert_abs_diff_eq!(closeness_gap(&m, &pi, g).unwrap(), 0.0, epsilon = 1e-12);
        }
        // Rescaled values (0.55, 0.45) against a gain of 0.5.
        let m = MdpModel::new(2, vec![1, 1], vec![vec![0.5, 0.5]; 2], vec![1.0, 0.0]).unwrap();
        let pi = DeterministicPolicy::new(vec![0, 0]);
        let c = check_closeness(&m, &pi, 0.9).unwrap();
        assert_abs_diff_eq!(c.gap, 0.05, epsilon = 1e-12);
        assert_eq!(c.t_mix, 1);
        assert_abs_diff_eq!(c.bound, 0.3, epsilon = 1e-12);
        assert!(c.holds);
    }
}
