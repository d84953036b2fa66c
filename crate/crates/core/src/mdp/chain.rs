use nalgebra::{DMatrix, DVector};

use super::model::{check_distribution, MdpModel};
use super::policy::Policy;
use crate::error::{Error, Result};

/// The Markov chain `(P^π, r^π)` a policy induces on a model.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
}

impl InducedChain {
    /// Builds a chain directly from a row-stochastic matrix and a reward
    /// vector in `[0, 1]`.
    pub fn new(rows: Vec<Vec<f64>>, reward: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || reward.len() != n {
            return Err(Error::validation(
                "chain",
                format!("{n} rows with {} rewards", reward.len()),
            ));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation("chain", format!("row {s} has length {}", row.len())));
            }
            check_distribution(row, "chain", || format!("row {s}"))?;
        }
        if let Some(r) = reward.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::validation("chain", format!("reward {r} outside [0, 1]")));
        }
        Ok(InducedChain {
            transition: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
            reward: DVector::from_vec(reward),
        })
    }

    pub fn num_states(&self) -> usize {
        self.reward.len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }
}

/// Mixes the model's rows and rewards with the policy's action weights.
pub fn induce_chain<P: Policy + ?Sized>(model: &MdpModel, policy: &P) -> Result<InducedChain> {
    policy.check(model)?;
    let n = model.num_states();
    let mut transition = DMatrix::zeros(n, n);
    let mut reward = DVector::zeros(n);
    for s in 0..n {
        policy.for_each_action(s, &mut |a, w| {
            for (j, &p) in model.row(s, a).iter().enumerate() {
                transition[(s, j)] += w * p;
            }
            reward[s] += w * model.reward(s, a);
        });
    }
    Ok(InducedChain { transition, reward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{DeterministicPolicy, RandomizedPolicy};

    #[test]
    fn single_state_self_loop() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.7]).unwrap();
        let c = induce_chain(&m, &DeterministicPolicy::new(vec![0])).unwrap();
        assert_eq!(c.transition()[(0, 0)], 1.0);
        assert_eq!(c.reward()[0], 0.7);
    }

    #[test]
    fn deterministic_policy_selects_rows_verbatim() {
        let m = MdpModel::new(
            2,
            vec![2, 2],
            vec![vec![0.2, 0.8], vec![1.0, 0.0], vec![0.6, 0.4], vec![0.0, 1.0]],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let c = induce_chain(&m, &DeterministicPolicy::new(vec![0, 0])).unwrap();
        assert_eq!(c.transition().row(0).iter().copied().collect::<Vec<_>>(), vec![0.2, 0.8]);
        assert_eq!(c.transition().row(1).iter().copied().collect::<Vec<_>>(), vec![0.6, 0.4]);
        assert_eq!(c.reward().as_slice(), &[0.1, 0.3]);
    }

    #[test]
    fn randomized_policy_mixes_rows() {
        let m = MdpModel::new(
            2,
            vec![2, 1],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![1.0, 0.0, 0.5],
        )
        .unwrap();
        let pi = RandomizedPolicy::new(vec![vec![0.5, 0.5], vec![1.0]]);
        let c = induce_chain(&m, &pi).unwrap();
        assert_eq!(c.transition()[(0, 0)], 0.5);
        assert_eq!(c.transition()[(0, 1)], 0.5);
        assert_eq!(c.reward()[0], 0.5);
    }

    #[test]
    fn invalid_policy_is_rejected() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.7]).unwrap();
        let err = induce_chain(&m, &DeterministicPolicy::new(vec![3])).unwrap_err();
        assert!(err.to_string().contains("state 0"));
    }
}
