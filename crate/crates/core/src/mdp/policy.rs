use serde::{Deserialize, Serialize};

use super::model::{check_distribution, MdpModel};
use crate::error::{Error, Result};

/// Anything that assigns each state a distribution over its local actions.
pub trait Policy {
    fn check(&self, model: &MdpModel) -> Result<()>;

    /// Number of states the policy covers.
    fn num_states(&self) -> usize;

    /// Calls `f(local_action, probability)` for every action with nonzero
    /// weight at `state`, in increasing action order.
    fn for_each_action(&self, state: usize, f: &mut dyn FnMut(usize, f64));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicPolicy {
    pub action_index: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl DeterministicPolicy {
    pub fn new(action_index: Vec<usize>) -> Self {
        DeterministicPolicy {
            action_index,
            meta: None,
        }
    }

    pub fn action(&self, state: usize) -> usize {
        self.action_index[state]
    }

    /// Policy number `index` in lexicographic order of action vectors
    /// (state 0 most significant).
    pub fn from_lex_index(actions_per_state: &[usize], mut index: u128) -> Self {
        let mut actions = vec![0; actions_per_state.len()];
        for (s, &a) in actions_per_state.iter().enumerate().rev() {
            actions[s] = (index % a as u128) as usize;
            index /= a as u128;
        }
        DeterministicPolicy::new(actions)
    }
}

impl Policy for DeterministicPolicy {
    fn check(&self, model: &MdpModel) -> Result<()> {
        if self.action_index.len() != model.num_states() {
            return Err(Error::validation(
                "policy",
                format!(
                    "{} actions given for {} states",
                    self.action_index.len(),
                    model.num_states()
                ),
            ));
        }
        for (s, &a) in self.action_index.iter().enumerate() {
            if a >= model.num_actions(s) {
                return Err(Error::validation(
                    "policy",
                    format!("state {s}: action {a} out of range ({} actions)", model.num_actions(s)),
                ));
            }
        }
        Ok(())
    }

    fn num_states(&self) -> usize {
        self.action_index.len()
    }

    fn for_each_action(&self, state: usize, f: &mut dyn FnMut(usize, f64)) {
        f(self.action_index[state], 1.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedPolicy {
    pub action_distribution: Vec<Vec<f64>>,
}

impl RandomizedPolicy {
    pub fn new(action_distribution: Vec<Vec<f64>>) -> Self {
        RandomizedPolicy { action_distribution }
    }
}

impl Policy for RandomizedPolicy {
    fn check(&self, model: &MdpModel) -> Result<()> {
        if self.action_distribution.len() != model.num_states() {
            return Err(Error::validation(
                "policy",
                format!(
                    "{} distributions given for {} states",
                    self.action_distribution.len(),
                    model.num_states()
                ),
            ));
        }
        for (s, dist) in self.action_distribution.iter().enumerate() {
            if dist.len() > model.num_actions(s) {
                return Err(Error::validation(
                    "policy",
                    format!("state {s}: {} weights for {} actions", dist.len(), model.num_actions(s)),
                ));
            }
            check_distribution(dist, "policy", || format!("state {s}"))?;
        }
        Ok(())
    }

    fn num_states(&self) -> usize {
        self.action_distribution.len()
    }

    fn for_each_action(&self, state: usize, f: &mut dyn FnMut(usize, f64)) {
        for (a, &w) in self.action_distribution[state].iter().enumerate() {
            if w > 0.0 {
                f(a, w);
            }
        }
    }
}

/// Iterator over all deterministic policies in lexicographic order.
pub fn enumerate_policies(model: &MdpModel) -> impl Iterator<Item = DeterministicPolicy> + '_ {
    let count = model.policy_count();
    (0..count).map(move |i| DeterministicPolicy::from_lex_index(model.actions_per_state(), i))
}
