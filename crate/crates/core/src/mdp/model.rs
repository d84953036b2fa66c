use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const ROW_SUM_TOL: f64 = 1e-12;

/// A tabular MDP `(S, A, P, r)` with per-state action sets.
///
/// State-action pairs are addressed by a flattened index: the prefix sum of
/// `actions_per_state` up to the state plus the local action index. Every
/// file format in the crate uses this indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct MdpModel {
    num_states: usize,
    actions_per_state: Vec<usize>,
    offsets: Vec<usize>,
    transitions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    meta: Option<serde_json::Value>,
}

/// On-disk JSON layout of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawModel {
    pub num_states: usize,
    pub actions_per_state: Vec<usize>,
    pub transitions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl TryFrom<RawModel> for MdpModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let mut model = MdpModel::new(
            raw.num_states,
            raw.actions_per_state,
            raw.transitions,
            raw.rewards,
        )?;
        model.meta = raw.meta;
        Ok(model)
    }
}

impl From<MdpModel> for RawModel {
    fn from(m: MdpModel) -> Self {
        RawModel {
            num_states: m.num_states,
            actions_per_state: m.actions_per_state,
            transitions: m.transitions,
            rewards: m.rewards,
            meta: m.meta,
        }
    }
}

pub(crate) fn check_distribution(row: &[f64], what: &'static str, ctx: impl Fn() -> String) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::validation(what, format!("{}: entry {p} is not a probability", ctx())));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::validation(what, format!("{}: sums to {sum}", ctx())));
    }
    Ok(())
}

impl MdpModel {
    pub fn new(
        num_states: usize,
        actions_per_state: Vec<usize>,
        transitions: Vec<Vec<f64>>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::validation("model", "num_states must be positive"));
        }
        if actions_per_state.len() != num_states {
            return Err(Error::validation(
                "model",
                format!(
                    "actions_per_state has {} entries for {num_states} states",
                    actions_per_state.len()
                ),
            ));
        }
        if let Some(s) = actions_per_state.iter().position(|&a| a == 0) {
            return Err(Error::validation("model", format!("state {s} has no actions")));
        }
        let mut offsets = Vec::with_capacity(num_states + 1);
        let mut acc = 0;
        offsets.push(0);
        for &a in &actions_per_state {
            acc += a;
            offsets.push(acc);
        }
        let total = acc;
        if transitions.len() != total || rewards.len() != total {
            return Err(Error::validation(
                "model",
                format!(
                    "expected {total} transition rows and rewards, got {} and {}",
                    transitions.len(),
                    rewards.len()
                ),
            ));
        }
        for (pair, row) in transitions.iter().enumerate() {
            if row.len() != num_states {
                return Err(Error::validation(
                    "model",
                    format!("transition row {pair} has length {}", row.len()),
                ));
            }
            check_distribution(row, "model", || format!("transition row {pair}"))?;
        }
        for (pair, &r) in rewards.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::validation(
                    "model",
                    format!("reward {r} of pair {pair} outside [0, 1]"),
                ));
            }
        }
        Ok(MdpModel {
            num_states,
            actions_per_state,
            offsets,
            transitions,
            rewards,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions_per_state(&self) -> &[usize] {
        &self.actions_per_state
    }

    pub fn num_actions(&self, state: usize) -> usize {
        self.actions_per_state[state]
    }

    /// Total number of state-action pairs, `A_tot`.
    pub fn total_actions(&self) -> usize {
        self.offsets[self.num_states]
    }

    pub fn pair_index(&self, state: usize, action: usize) -> usize {
        debug_assert!(action < self.actions_per_state[state]);
        self.offsets[state] + action
    }

    /// Inverse of [`MdpModel::pair_index`].
    pub fn pair_state_action(&self, pair: usize) -> (usize, usize) {
        let state = self.offsets.partition_point(|&o| o <= pair) - 1;
        (state, pair - self.offsets[state])
    }

    pub fn check_pair(&self, state: usize, action: usize) -> Result<usize> {
        if state >= self.num_states {
            return Err(Error::validation("pair", format!("state {state} out of range")));
        }
        if action >= self.actions_per_state[state] {
            return Err(Error::validation(
                "pair",
                format!(
                    "action {action} invalid for state {state} ({} actions)",
                    self.actions_per_state[state]
                ),
            ));
        }
        Ok(self.pair_index(state, action))
    }

    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        &self.transitions[self.pair_index(state, action)]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[self.pair_index(state, action)]
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }

    /// Number of deterministic stationary policies, saturating.
    pub fn policy_count(&self) -> u128 {
        self.actions_per_state
            .iter()
            .fold(1u128, |acc, &a| acc.saturating_mul(a as u128))
    }

    /// Same transitions, different rewards.
    pub fn with_rewards(&self, rewards: Vec<f64>) -> Result<Self> {
        let mut m = MdpModel::new(
            self.num_states,
            self.actions_per_state.clone(),
            self.transitions.clone(),
            rewards,
        )?;
        m.meta = self.meta.clone();
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> MdpModel {
        MdpModel::new(
            2,
            vec![2, 1],
            vec![vec![1.0, 0.0], vec![0.3, 0.7], vec![0.5, 0.5]],
            vec![0.0, 1.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn flattened_indexing() {
        let m = two_state();
        assert_eq!(m.total_actions(), 3);
        assert_eq!(m.pair_index(1, 0), 2);
        assert_eq!(m.pair_state_action(1), (0, 1));
        assert_eq!(m.pair_state_action(2), (1, 0));
        assert_eq!(m.row(0, 1), &[0.3, 0.7]);
        assert_eq!(m.policy_count(), 2);
    }

    #[test]
    fn rejects_bad_rows_and_rewards() {
        let bad_sum = MdpModel::new(1, vec![1], vec![vec![0.9]], vec![0.0]);
        assert!(matches!(bad_sum, Err(Error::Validation { .. })));
        let bad_reward = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![1.5]);
        assert!(bad_reward.is_err());
        let no_actions = MdpModel::new(1, vec![0], vec![], vec![]);
        assert!(no_actions.is_err());
        let negative = MdpModel::new(2, vec![1, 1], vec![vec![1.5, -0.5], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert!(negative.is_err());
    }

    #[test]
    fn json_layout_is_stable() {
        let m = two_state().with_meta(serde_json::json!({"note": "x"}));
        let text = m.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["num_states"], 2);
        assert_eq!(v["actions_per_state"], serde_json::json!([2, 1]));
        assert_eq!(v["transitions"][1], serde_json::json!([0.3, 0.7]));
        assert_eq!(v["rewards"], serde_json::json!([0.0, 1.0, 0.5]));
        assert_eq!(MdpModel::from_json(&text).unwrap(), m);
        let broken = text.replace("0.7", "0.8");
        assert!(MdpModel::from_json(&broken).is_err());
    }
}
