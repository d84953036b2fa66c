use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chain::{induce_chain, InducedChain};
use super::eval::{stationary_distribution, DEFAULT_STATIONARY_TOL};
use super::model::MdpModel;
use super::policy::DeterministicPolicy;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Largest number of deterministic policies the exact enumerators accept.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Slack on the `≤ 1/2` comparison so that distances equal to one half up to
/// rounding count as mixed.
const HALF_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub mixing_time: usize,
    pub stationary: Vec<f64>,
    pub worst_start_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMixingReport {
    pub report: MixingReport,
    pub policy: DeterministicPolicy,
    pub policies_checked: u64,
}

/// Row `s` of `M` against `ν`, in ℓ1; the maximum over `s` is
/// `‖M − 1νᵀ‖_∞`.
fn worst_row_distance(m: &DMatrix<f64>, nu: &[f64]) -> (usize, f64) {
    let mut worst = (0, f64::NEG_INFINITY);
    for (s, row) in m.row_iter().enumerate() {
        let d: f64 = row.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum();
        if d > worst.1 {
            worst = (s, d);
        }
    }
    worst
}

/// `‖(P^π)^k − 1νᵀ‖_∞` for `k = 0..=max_k`.
pub fn distance_profile(chain: &InducedChain, nu: &[f64], max_k: usize) -> Vec<f64> {
    let n = chain.num_states();
    let p = chain.transition();
    let mut m = DMatrix::identity(n, n);
    let mut out = Vec::with_capacity(max_k + 1);
    for k in 0..=max_k {
        if k > 0 {
            m = &m * p;
        }
        out.push(worst_row_distance(&m, nu).1);
    }
    out
}

/// Smallest `t ≥ 1` with `max_s ‖e_sᵀ P^t − νᵀ‖₁ ≤ 1/2`.
///
/// The distance is convex in the initial distribution, so its maximum over
/// the simplex sits at a basis vector and `S` starts suffice.
pub fn mixing_time(chain: &InducedChain, max_t: usize) -> Result<MixingReport> {
    let nu = stationary_distribution(chain, DEFAULT_STATIONARY_TOL)?;
    let p = chain.transition();
    let mut m = p.clone();
    let mut last = f64::INFINITY;
    for t in 1..=max_t {
        if t > 1 {
            m = &m * p;
        }
        let (worst_state, d) = worst_row_distance(&m, &nu);
        last = d;
        if d <= 0.5 + HALF_SLACK {
            return Ok(MixingReport {
                mixing_time: t,
                stationary: nu,
                worst_start_state: worst_state,
            });
        }
    }
    Err(Error::MixingBudget {
        max_t,
        distance: last,
    })
}

pub(crate) fn check_cap(model: &MdpModel, cap: u64) -> Result<u64> {
    let count = model.policy_count();
    if count > cap as u128 {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(count as u64)
}

/// Exact `max_π t_mix(π)` over deterministic stationary policies.
pub fn model_mixing_time(model: &MdpModel, max_t: usize) -> Result<ModelMixingReport> {
    model_mixing_time_with(model, max_t, DEFAULT_ENUMERATION_CAP, Exec::default())
}

pub fn model_mixing_time_with(
    model: &MdpModel,
    max_t: usize,
    cap: u64,
    exec: Exec,
) -> Result<ModelMixingReport> {
    let count = check_cap(model, cap)?;
    let reports = exec.map(count as usize, |i| {
        let policy = DeterministicPolicy::from_lex_index(model.actions_per_state(), i as u128);
        induce_chain(model, &policy).and_then(|c| mixing_time(&c, max_t))
    });
    let mut best: Option<(usize, MixingReport)> = None;
    for (i, r) in reports.into_iter().enumerate() {
        let r = r?;
        if best.as_ref().is_none_or(|(_, b)| r.mixing_time > b.mixing_time) {
            best = Some((i, r));
        }
    }
    let (i, report) = best.expect("at least one policy");
    Ok(ModelMixingReport {
        report,
        policy: DeterministicPolicy::from_lex_index(model.actions_per_state(), i as u128),
        policies_checked: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: Vec<Vec<f64>>) -> InducedChain {
        let n = rows.len();
        InducedChain::new(rows, vec![0.0; n]).unwrap()
    }

    #[test]
    fn exact_one_step_mixing() {
        let r = mixing_time(&chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]]), 10).unwrap();
        assert_eq!(r.mixing_time, 1);
    }

    #[test]
    fn lazy_chain_mixes_at_four() {
        // Distance from a basis start is 0.8^t: 0.512 at t = 3, 0.4096 at t = 4.
        let c = chain(vec![vec![0.9, 0.1], vec![0.1, 0.9]]);
        let r = mixing_time(&c, 100).unwrap();
        assert_eq!(r.mixing_time, 4);
        let profile = distance_profile(&c, &r.stationary, 4);
        for (t, d) in profile.iter().enumerate() {
            assert!((d - 0.8f64.powi(t as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_does_not_mix() {
        assert!(mixing_time(&chain(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), 50).is_err());
    }

    #[test]
    fn budget_error_reports_distance() {
        let c = chain(vec![vec![0.99, 0.01], vec![0.01, 0.99]]);
        match mixing_time(&c, 5) {
            Err(Error::MixingBudget { max_t: 5, distance }) => {
                assert!((distance - 0.98f64.powi(5)).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_max_over_enumerated_policies() {
        // State 0: action 0 stays lazily, action 1 jumps to the uniform row.
        let m = MdpModel::new(
            2,
            vec![2, 2],
            vec![
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.1, 0.9],
                vec![0.5, 0.5],
            ],
            vec![0.0; 4],
        )
        .unwrap();
        let r = model_mixing_time(&m, 100).unwrap();
        assert!(r.report.mixing_time >= 4);
        assert_eq!(r.policy.action_index, vec![0, 0]);
        assert_eq!(r.policies_checked, 4);
        let single = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.5]).unwrap();
        assert_eq!(model_mixing_time(&single, 10).unwrap().report.mixing_time, 1);
    }

    #[test]
    fn cap_is_enforced() {
        let m = MdpModel::new(3, vec![2, 2, 2], vec![vec![1.0 / 3.0; 3]; 6], vec![0.0; 6]).unwrap();
        assert!(matches!(
            model_mixing_time_with(&m, 10, 7, Exec::Sequential),
            Err(Error::EnumerationCap { count: 8, cap: 7 })
        ));
    }
}
