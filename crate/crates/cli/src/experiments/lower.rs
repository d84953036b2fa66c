//! Lower-bound harness: how often a learner with `T` samples per arm picks
//! the wrong arm, both on the bare two-arm test and on full instances.

use amdplab_core::exec::{derive_seed, stream_rng};
use amdplab_core::hard::{
    build_hard_instance, closed_form_gain, distinguisher_experiment_with, gain_gap, kl_and_threshold_with,
    HardInstanceSpec, DEFAULT_C_LB,
};
use amdplab_core::sampling::GenerativeModel;
use amdplab_core::Exec;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LowerGrid};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerRow {
    pub gamma_lb: f64,
    pub eps: f64,
    pub c_lb: f64,
    pub kl: f64,
    pub threshold: u64,
    pub t_multiplier: f64,
    pub t: u64,
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub instance_trials: u64,
    pub wrong_action_fraction: Option<f64>,
    pub mean_gain_gap: Option<f64>,
    /// Largest `|gap − Σ per-state gaps|` over the instance trials.
    pub additivity_residual: Option<f64>,
    pub error: String,
}

/// One full-instance trial: draw `t` next states from every second-level
/// arm, play the arm with the most self-transitions (lowest index on ties),
/// and score the resulting policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceTrial {
    pub wrong_fraction: f64,
    pub gain_gap: f64,
    pub additivity_residual: f64,
}

pub fn instance_trial(spec: &HardInstanceSpec, t: u64, seed: u64) -> CliResult<InstanceTrial> {
    let (model, truth) = build_hard_instance(spec)?;
    let gm = GenerativeModel::new(&model);
    let mut chosen = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut best = (0, 0u64);
        for a in 0..spec.k {
            let state = spec.x2(i, a);
            let mut rng = stream_rng(seed, state as u64);
            let mut stays = 0;
            for _ in 0..t {
                if gm.sample_next_state(state, 0, &mut rng)? == state {
                    stays += 1;
                }
            }
            if stays > best.1 {
                best = (a, stays);
            }
        }
        chosen.push(best.0);
    }
    let gap = truth.optimal_gain - closed_form_gain(spec, &spec.policy(&chosen))?;
    let mut per_state = 0.0;
    let mut wrong = 0;
    for (i, (&a, &opt)) in chosen.iter().zip(&truth.optimal_action).enumerate() {
        if a != opt {
            wrong += 1;
            per_state += gain_gap(spec.arm_p(i, opt), spec.arm_p(i, a), spec.gamma_lb, spec.n)?;
        }
    }
    Ok(InstanceTrial {
        wrong_fraction: wrong as f64 / spec.n as f64,
        gain_gap: gap,
        additivity_residual: (gap - per_state).abs(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    gamma_lb: f64,
    eps: f64,
    multiplier: f64,
}

fn run_cell(grid: &LowerGrid, cell: Cell, trials: u64, seed: u64, exec: Exec) -> LowerRow {
    let c_lb = grid.c_lb.unwrap_or(DEFAULT_C_LB);
    let mut row = LowerRow {
        gamma_lb: cell.gamma_lb,
        eps: cell.eps,
        c_lb,
        kl: f64::NAN,
        threshold: 0,
        t_multiplier: cell.multiplier,
        t: 0,
        trials,
        errors: 0,
        error_rate: f64::NAN,
        instance_trials: grid.instance_trials,
        wrong_action_fraction: None,
        mean_gain_gap: None,
        additivity_residual: None,
        error: String::new(),
    };
    let outcome = (|| -> CliResult<()> {
        let kt = kl_and_threshold_with(cell.gamma_lb, cell.eps, c_lb)?;
        row.kl = kt.kl;
        row.threshold = kt.threshold;
        row.t = (cell.multiplier * kt.threshold as f64).round() as u64;
        let d = distinguisher_experiment_with(cell.gamma_lb, cell.eps, row.t, trials, derive_seed(seed, &[0]), exec)?;
        row.errors = d.errors;
        row.error_rate = d.error_rate;
        if grid.instance_trials > 0 {
            let results = exec.map(grid.instance_trials as usize, |j| {
                let trial_seed = derive_seed(seed, &[1, j as u64]);
                let spec = HardInstanceSpec::random(grid.n, grid.k, cell.gamma_lb, cell.eps, trial_seed)?;
                instance_trial(&spec, row.t, derive_seed(trial_seed, &[2]))
            });
            let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;
            let m = results.len() as f64;
            row.wrong_action_fraction = Some(results.iter().map(|r| r.wrong_fraction).sum::<f64>() / m);
            row.mean_gain_gap = Some(results.iter().map(|r| r.gain_gap).sum::<f64>() / m);
            row.additivity_residual = Some(results.iter().map(|r| r.additivity_residual).fold(0.0, f64::max));
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = e.to_string();
    }
    row
}

/// One row per `(γ_lb, ε, multiplier)` cell, in grid order. Cell `c` uses
/// seed `derive_seed(master_seed, [c])`.
pub fn run_lower_experiment(config: &ExperimentConfig, exec: Exec) -> CliResult<Vec<LowerRow>> {
    let grid = config.validate_lower()?;
    let mut cells = Vec::new();
    for &gamma_lb in &grid.gamma_lb {
        for &eps in &grid.eps {
            for &multiplier in &grid.t_multipliers {
                cells.push(Cell {
                    gamma_lb,
                    eps,
                    multiplier,
                });
            }
        }
    }
    Ok(cells
        .into_iter()
        .enumerate()
        .map(|(c, cell)| run_cell(grid, cell, config.trials, derive_seed(config.master_seed, &[c as u64]), exec))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn many_samples_find_every_arm() {
        let spec = HardInstanceSpec::random(3, 3, 0.5, 1.0 / 32.0, 2).unwrap();
        let r = instance_trial(&spec, 400_000, 1).unwrap();
        assert_eq!(r.wrong_fraction, 0.0);
        assert!(r.gain_gap.abs() < 1e-12);
    }

    #[test]
    fn gap_is_sum_of_per_state_gaps() {
        let spec = HardInstanceSpec::random(4, 3, 0.9, 1.0 / 32.0, 8).unwrap();
        let r = instance_trial(&spec, 10, 3).unwrap();
        assert!(r.additivity_residual <= 1e-9);
        assert!(r.gain_gap >= -1e-12);
    }

    #[test]
    fn bad_cell_reports_error() {
        let cfg = ExperimentConfig::from_json(
            r#"{"trials": 10, "lower": {"eps": [0.03, 0.5], "gamma_lb": [0.9], "t_multipliers": [1.0], "instance_trials": 1}}"#,
        )
        .unwrap();
        let rows = run_lower_experiment(&cfg, Exec::Sequential).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].error, "");
        // ε = 0.5 is fine for the two-arm test but not for building instances.
        assert!(rows[1].error.contains("eps"));
        assert!(rows[1].error_rate.is_finite());
    }
}
