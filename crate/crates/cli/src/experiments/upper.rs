//! Upper-bound harness: run the reduction on a grid of instances and
//! budgets and score each returned policy against the exact optimum.

use std::time::Instant;

use amdplab_core::exec::derive_seed;
use amdplab_core::hard::{build_hard_instance, random_mixing_model, GroundTruth, HardInstanceSpec};
use amdplab_core::mdp::{brute_force_optimal_gain, gain, model_mixing_time, MdpModel, DEFAULT_ENUMERATION_CAP};
use amdplab_core::reduction::{reduction_parameters, solve_amdp_on, AmdpOptions, AmdpReport};
use amdplab_core::solver::DEFAULT_C_SAMPLE;
use amdplab_core::Exec;
use serde::{Deserialize, Serialize};

use super::MIXING_MAX_T;
use crate::config::{BudgetSearch, ExperimentConfig, InstanceSource};
use crate::error::{CliError, CliResult};
use crate::io::{model_hash, read_model};

/// Seed path tags under a trial seed.
const INSTANCE_TAG: u64 = 1;
const SAMPLING_TAG: u64 = 2;

/// One trial of one grid cell. Column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub trial_seed: u64,
    pub gamma_lb: Option<f64>,
    pub model_hash: String,
    pub t_mix_input: Option<u64>,
    pub t_mix_measured: Option<usize>,
    pub eps: f64,
    pub gamma: Option<f64>,
    pub samples_per_pair: Option<u64>,
    pub total_samples: Option<u64>,
    pub policy_gain: Option<f64>,
    pub optimal_gain: Option<f64>,
    pub gap: Option<f64>,
    pub per_state_correct_fraction: Option<f64>,
    pub wallclock_ms: u64,
    pub error: String,
}

pub const RESULT_COLUMNS: [&str; 16] = [
    "instance_id",
    "trial_seed",
    "gamma_lb",
    "model_hash",
    "t_mix_input",
    "t_mix_measured",
    "eps",
    "gamma",
    "samples_per_pair",
    "total_samples",
    "policy_gain",
    "optimal_gain",
    "gap",
    "per_state_correct_fraction",
    "wallclock_ms",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    gamma_lb: Option<f64>,
    eps: f64,
    t_mix: Option<u64>,
    samples_per_pair: Option<u64>,
}

fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    fn or_none<T: Copy>(v: &[T]) -> Vec<Option<T>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().copied().map(Some).collect()
        }
    }
    let mut out = Vec::new();
    for gamma_lb in or_none(&config.gamma_lb) {
        for &eps in &config.eps {
            for t_mix in or_none(&config.t_mix) {
                for samples_per_pair in or_none(&config.samples_per_pair) {
                    out.push(Cell {
                        gamma_lb,
                        eps,
                        t_mix,
                        samples_per_pair,
                    });
                }
            }
        }
    }
    out
}

/// A materialized trial instance.
pub struct Instance {
    pub id: String,
    pub model: MdpModel,
    pub hard: Option<(HardInstanceSpec, GroundTruth)>,
}

impl Instance {
    pub fn hard(spec: HardInstanceSpec) -> CliResult<Self> {
        let (model, truth) = build_hard_instance(&spec)?;
        let id = format!("hard-n{}-k{}-g{}-e{}", spec.n, spec.k, spec.gamma_lb, spec.eps);
        Ok(Instance {
            id,
            model,
            hard: Some((spec, truth)),
        })
    }

    fn from_model(id: String, model: MdpModel) -> CliResult<Self> {
        let hard = match HardInstanceSpec::from_meta(&model) {
            Ok(spec) => {
                let (_, truth) = build_hard_instance(&spec)?;
                Some((spec, truth))
            }
            Err(_) => None,
        };
        Ok(Instance { id, model, hard })
    }

    pub fn gamma_lb(&self) -> Option<f64> {
        self.hard.as_ref().map(|(s, _)| s.gamma_lb)
    }

    /// Exact optimal gain: closed form on hard instances, enumeration
    /// otherwise.
    pub fn optimal_gain(&self) -> CliResult<f64> {
        match &self.hard {
            Some((_, truth)) => Ok(truth.optimal_gain),
            None => Ok(brute_force_optimal_gain(&self.model)?.1),
        }
    }

    pub fn correct_fraction(&self, actions: &[usize]) -> Option<f64> {
        self.hard.as_ref().map(|(spec, truth)| {
            let right = truth
                .optimal_action
                .iter()
                .zip(actions)
                .filter(|(a, b)| a == b)
                .count();
            right as f64 / spec.n as f64
        })
    }
}

fn build_instance(source: &InstanceSource, preloaded: Option<&MdpModel>, gamma_lb: Option<f64>, trial_seed: u64) -> CliResult<Instance> {
    let derived = derive_seed(trial_seed, &[INSTANCE_TAG]);
    match source {
        InstanceSource::File { path } => {
            let model = preloaded.expect("file instances are loaded up front").clone();
            Instance::from_model(format!("file:{}", path.display()), model)
        }
        InstanceSource::Hard {
            n,
            k,
            gamma_lb: g0,
            eps,
            seed,
        } => {
            let s = seed.unwrap_or(derived);
            let spec = HardInstanceSpec::random(*n, *k, gamma_lb.unwrap_or(*g0), *eps, s)?;
            let mut inst = Instance::hard(spec)?;
            inst.id.push_str(&format!("-s{s}"));
            Ok(inst)
        }
        InstanceSource::Random {
            num_states,
            actions,
            beta,
            seed,
        } => {
            let s = seed.unwrap_or(derived);
            let model = random_mixing_model(s, *num_states, &vec![*actions; *num_states], *beta)?;
            Ok(Instance {
                id: format!("random-n{num_states}-a{actions}-b{beta}-s{s}"),
                model,
                hard: None,
            })
        }
    }
}

fn measured_mixing(model: &MdpModel) -> Option<usize> {
    if model.policy_count() > DEFAULT_ENUMERATION_CAP as u128 {
        return None;
    }
    model_mixing_time(model, MIXING_MAX_T).ok().map(|r| r.report.mixing_time)
}

struct Scored {
    report: AmdpReport,
    policy_gain: f64,
    gap: f64,
}

fn score(inst: &Instance, optimal: f64, eps: f64, t_mix: u64, delta: f64, opts: AmdpOptions, seed: u64) -> CliResult<Scored> {
    let params = reduction_parameters(eps, t_mix, delta)?;
    let (report, _) = solve_amdp_on(&inst.model, &params, opts, seed)?;
    let policy_gain = gain(&inst.model, &report.policy)?;
    Ok(Scored {
        gap: optimal - policy_gain,
        policy_gain,
        report,
    })
}

/// Smallest budget in `[lo, hi]` whose gap is at most the target, by
/// bisection on the same sampling seed.
#[allow(clippy::too_many_arguments)]
fn search_budget(
    inst: &Instance,
    optimal: f64,
    eps: f64,
    t_mix: u64,
    delta: f64,
    base: AmdpOptions,
    seed: u64,
    search: &BudgetSearch,
) -> CliResult<Scored> {
    let at = |n: u64| {
        let opts = AmdpOptions {
            samples_per_pair: Some(n),
            ..base
        };
        score(inst, optimal, eps, t_mix, delta, opts, seed)
    };
    let top = at(search.hi)?;
    if top.gap > search.target_gap {
        return Err(CliError::runtime(format!(
            "gap {:.3e} above target {} at the largest budget {}",
            top.gap, search.target_gap, search.hi
        )));
    }
    let (mut lo, mut hi, mut best) = (search.lo, search.hi, top);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let s = at(mid)?;
        if s.gap <= search.target_gap {
            hi = mid;
            best = s;
        } else {
            lo = mid + 1;
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    config: &ExperimentConfig,
    source: &InstanceSource,
    preloaded: Option<&MdpModel>,
    cell: &Cell,
    trial_seed: u64,
    timing: bool,
) -> ResultRow {
    let started = Instant::now();
    let mut row = ResultRow {
        instance_id: String::new(),
        trial_seed,
        gamma_lb: None,
        model_hash: String::new(),
        t_mix_input: cell.t_mix,
        t_mix_measured: None,
        eps: cell.eps,
        gamma: None,
        samples_per_pair: None,
        total_samples: None,
        policy_gain: None,
        optimal_gain: None,
        gap: None,
        per_state_correct_fraction: None,
        wallclock_ms: 0,
        error: String::new(),
    };
    let outcome = (|| -> CliResult<()> {
        let inst = build_instance(source, preloaded, cell.gamma_lb, trial_seed)?;
        row.instance_id = inst.id.clone();
        row.gamma_lb = inst.gamma_lb();
        row.model_hash = model_hash(&inst.model);
        row.t_mix_measured = measured_mixing(&inst.model);
        let t_mix = match (cell.t_mix, row.t_mix_measured) {
            (Some(t), _) => t,
            (None, Some(t)) => t as u64,
            (None, None) => {
                return Err(CliError::validation(
                    "t_mix not given and the model is too large to measure it exactly",
                ))
            }
        };
        let optimal = inst.optimal_gain()?;
        row.optimal_gain = Some(optimal);
        let opts = AmdpOptions {
            c_sample: config.c_sample.unwrap_or(DEFAULT_C_SAMPLE),
            samples_per_pair: cell.samples_per_pair,
            exec: Exec::Sequential,
        };
        let seed = derive_seed(trial_seed, &[SAMPLING_TAG]);
        let scored = match &config.budget_search {
            Some(search) => search_budget(&inst, optimal, cell.eps, t_mix, config.delta, opts, seed, search)?,
            None => score(&inst, optimal, cell.eps, t_mix, config.delta, opts, seed)?,
        };
        row.gamma = Some(scored.report.params.gamma);
        row.samples_per_pair = Some(scored.report.samples_per_pair);
        row.total_samples = Some(scored.report.total_samples);
        row.policy_gain = Some(scored.policy_gain);
        row.gap = Some(scored.gap);
        row.per_state_correct_fraction = inst.correct_fraction(&scored.report.policy.action_index);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = e.to_string();
    }
    if timing {
        row.wallclock_ms = started.elapsed().as_millis() as u64;
    }
    row
}

/// Runs every (cell, trial) pair. Trial `j` of cell `c` uses seed
/// `derive_seed(master_seed, [c, j])`; rows come back ordered by cell, then
/// trial. A failing trial fills its `error` column and the run continues.
pub fn run_upper_experiment(config: &ExperimentConfig, exec: Exec, timing: bool) -> CliResult<Vec<ResultRow>> {
    let source = config.validate_upper()?;
    let preloaded = match source {
        InstanceSource::File { path } => Some(read_model(path)?),
        _ => None,
    };
    let grid = cells(config);
    let trials = config.trials as usize;
    Ok(exec.map(grid.len() * trials, |idx| {
        let (c, j) = (idx / trials, idx % trials);
        let seed = derive_seed(config.master_seed, &[c as u64, j as u64]);
        run_trial(config, source, preloaded.as_ref(), &grid[c], seed, timing)
    }))
}
