//! Exact reference solvers used as oracles.

use super::eval::{gain, Discount, ValueVector};
use super::mixing::{check_cap, DEFAULT_ENUMERATION_CAP};
use super::model::MdpModel;
use super::policy::DeterministicPolicy;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Gains closer than this are treated as ties.
pub const GAIN_TIE_TOL: f64 = 1e-12;

pub const DEFAULT_VI_MAX_ITERS: usize = 10_000_000;

/// Best deterministic policy by exhaustive gain evaluation. Ties go to the
/// lexicographically smallest action vector.
pub fn brute_force_optimal_gain(model: &MdpModel) -> Result<(DeterministicPolicy, f64)> {
    brute_force_optimal_gain_with(model, DEFAULT_ENUMERATION_CAP, Exec::default())
}

pub fn brute_force_optimal_gain_with(
    model: &MdpModel,
    cap: u64,
    exec: Exec,
) -> Result<(DeterministicPolicy, f64)> {
    let count = check_cap(model, cap)?;
    let gains = exec.map(count as usize, |i| {
        gain(
            model,
            &DeterministicPolicy::from_lex_index(model.actions_per_state(), i as u128),
        )
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in gains.into_iter().enumerate() {
        let g = g?;
        if best.is_none_or(|(_, b)| g > b + GAIN_TIE_TOL) {
            best = Some((i, g));
        }
    }
    let (i, g) = best.expect("at least one policy");
    Ok((
        DeterministicPolicy::from_lex_index(model.actions_per_state(), i as u128),
        g,
    ))
}

/// Sparse copy of the transition rows for repeated Bellman backups.
pub(crate) struct SparseRows {
    entries: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub(crate) fn new(model: &MdpModel) -> Self {
        SparseRows {
            entries: model
                .transitions()
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(j, &p)| (j, p))
                        .collect()
                })
                .collect(),
        }
    }

    #[inline]
    fn dot(&self, pair: usize, v: &[f64]) -> f64 {
        self.entries[pair].iter().map(|&(j, p)| p * v[j]).sum()
    }
}

/// Output of optimal value iteration.
#[derive(Debug, Clone)]
pub struct ValueIterationRun {
    pub values: Vec<f64>,
    pub policy: DeterministicPolicy,
    pub iterations: usize,
    /// `‖v_{k+1} − v_k‖_∞` per iteration.
    pub step_sizes: Vec<f64>,
}

fn backup(
    model: &MdpModel,
    rows: &SparseRows,
    rewards: &[f64],
    gamma: f64,
    v: &[f64],
    out: &mut [f64],
    policy: &mut [usize],
) {
    for s in 0..model.num_states() {
        let base = model.pair_index(s, 0);
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for a in 0..model.num_actions(s) {
            let q = rewards[base + a] + gamma * rows.dot(base + a, v);
            if q > best {
                best = q;
                arg = a;
            }
        }
        out[s] = best;
        policy[s] = arg;
    }
}

/// Optimal value iteration `v ← max_a (r_{s,a} + γ⟨p_{s,a}, v⟩)` from
/// `v = 0`, stopped once `‖v_{k+1} − v_k‖_∞ ≤ tol·(1−γ)/(2γ)`, which puts
/// the final iterate within `tol/2` of `v*` and its greedy policy within
/// `tol` of optimal. `rewards` may differ from the model's own.
pub fn value_iteration(
    model: &MdpModel,
    rewards: &[f64],
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<ValueIterationRun> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::range("gamma", gamma, "[0, 1)"));
    }
    if !(tol > 0.0) {
        return Err(Error::range("tol", tol, "(0, inf)"));
    }
    if rewards.len() != model.total_actions() {
        return Err(Error::validation(
            "rewards",
            format!("{} rewards for {} pairs", rewards.len(), model.total_actions()),
        ));
    }
    let threshold = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let rows = SparseRows::new(model);
    let n = model.num_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut policy = vec![0; n];
    let mut step_sizes = Vec::new();
    for it in 1..=max_iters {
        backup(model, &rows, rewards, gamma, &v, &mut next, &mut policy);
        let step = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        step_sizes.push(step);
        if step <= threshold {
            // Greedy policy with respect to the final iterate.
            backup(model, &rows, rewards, gamma, &v, &mut next, &mut policy);
            return Ok(ValueIterationRun {
                values: v,
                policy: DeterministicPolicy::new(policy),
                iterations: it,
                step_sizes,
            });
        }
    }
    Err(Error::IterationCap {
        max_iters,
        last_step: step_sizes.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Discounted optimum of the true model; ties go to the lowest action index.
pub fn exact_dmdp_optimal(model: &MdpModel, gamma: f64, tol: f64) -> Result<(DeterministicPolicy, ValueVector)> {
    let run = value_iteration(model, model.rewards(), gamma, tol, DEFAULT_VI_MAX_ITERS)?;
    Ok((
        run.policy,
        ValueVector {
            values: run.values,
            discount: Discount::Gamma(gamma),
            rescaled: false,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_discount_is_greedy_on_rewards() {
        let m = MdpModel::new(
            2,
            vec![3, 2],
            vec![vec![0.5, 0.5]; 5],
            vec![0.2, 0.9, 0.9, 0.1, 0.05],
        )
        .unwrap();
        let (pi, v) = exact_dmdp_optimal(&m, 0.0, 1e-9).unwrap();
        assert_eq!(pi.action_index, vec![1, 0]);
        assert_eq!(v.values, vec![0.9, 0.1]);
    }

    #[test]
    fn self_loop_geometric_series() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![1.0]).unwrap();
        let (_, v) = exact_dmdp_optimal(&m, 0.5, 1e-10).unwrap();
        assert_abs_diff_eq!(v.values[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn single_action_model_brute_force() {
        let m = MdpModel::new(
            2,
            vec![1, 1],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 0.0],
        )
        .unwrap();
        // Periodic chain: the unique stationary distribution cannot be found
        // by squaring, so the enumerator surfaces the error.
        assert!(brute_force_optimal_gain(&m).is_err());
        let m = MdpModel::new(
            2,
            vec![1, 1],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![1.0, 0.0],
        )
        .unwrap();
        let (pi, g) = brute_force_optimal_gain(&m).unwrap();
        assert_eq!(pi.action_index, vec![0, 0]);
        assert_abs_diff_eq!(g, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ties_go_to_smallest_action_vector() {
        let m = MdpModel::new(
            1,
            vec![3],
            vec![vec![1.0]; 3],
            vec![0.4, 0.8, 0.8],
        )
        .unwrap();
        let (pi, g) = brute_force_optimal_gain(&m).unwrap();
        assert_eq!(pi.action_index, vec![1]);
        assert_abs_diff_eq!(g, 0.8);
        let (pi, _) = exact_dmdp_optimal(&m, 0.9, 1e-9).unwrap();
        assert_eq!(pi.action_index, vec![1]);
    }

    #[test]
    fn steps_contract_by_gamma() {
        let m = MdpModel::new(
            2,
            vec![2, 2],
            vec![vec![0.3, 0.7], vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]],
            vec![0.1, 0.6, 0.9, 0.3],
        )
        .unwrap();
        let run = value_iteration(&m, m.rewards(), 0.95, 1e-8, 100_000).unwrap();
        for w in run.step_sizes.windows(2) {
            assert!(w[1] <= 0.95 * w[0] + 1e-12);
        }
    }

    #[test]
    fn iteration_cap_surfaces() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            value_iteration(&m, m.rewards(), 0.999, 1e-9, 10),
            Err(Error::IterationCap { max_iters: 10, .. })
        ));
    }
}
