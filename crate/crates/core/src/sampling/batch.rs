use serde::{Deserialize, Serialize};

use super::generative::{GenerativeModel, QueryLedger};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};
use crate::mdp::MdpModel;

/// A fixed per-pair sample count, chosen before any sample is seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub samples_per_pair: u64,
}

impl SamplePlan {
    pub fn new(samples_per_pair: u64) -> Self {
        SamplePlan { samples_per_pair }
    }

    pub fn total_budget(&self, total_actions: usize) -> u64 {
        self.samples_per_pair * total_actions as u64
    }
}

/// Next-state counts per flattened state-action pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub master_seed: u64,
    pub samples_per_pair: u64,
    pub counts: Vec<Vec<u64>>,
}

impl SampleSet {
    pub fn plan(&self) -> SamplePlan {
        SamplePlan::new(self.samples_per_pair)
    }

    pub fn check_against(&self, model: &MdpModel) -> Result<()> {
        if self.counts.len() != model.total_actions() {
            return Err(Error::SampleMismatch(format!(
                "{} count rows for {} pairs",
                self.counts.len(),
                model.total_actions()
            )));
        }
        for (pair, row) in self.counts.iter().enumerate() {
            if row.len() != model.num_states() {
                return Err(Error::SampleMismatch(format!(
                    "pair {pair}: {} counts for {} states",
                    row.len(),
                    model.num_states()
                )));
            }
            let total: u64 = row.iter().sum();
            if total != self.samples_per_pair {
                return Err(Error::SampleMismatch(format!(
                    "pair {pair}: counts sum to {total}, plan says {}",
                    self.samples_per_pair
                )));
            }
        }
        Ok(())
    }
}

/// Draws `plan.samples_per_pair` next states for every pair. Pair `i` uses
/// its own stream `(master_seed, i)`, so the result does not depend on the
/// order in which pairs are processed.
pub fn oblivious_batch(model: &MdpModel, plan: SamplePlan, master_seed: u64) -> (SampleSet, QueryLedger) {
    let gm = GenerativeModel::new(model);
    let set = oblivious_batch_from(&gm, plan, master_seed, Exec::default());
    (set, gm.ledger())
}

pub fn oblivious_batch_from(gm: &GenerativeModel<'_>, plan: SamplePlan, master_seed: u64, exec: Exec) -> SampleSet {
    let n = plan.samples_per_pair;
    let counts = exec.map(gm.model().total_actions(), |pair| {
        let mut rng = stream_rng(master_seed, pair as u64);
        gm.sample_counts(pair, n, &mut rng)
    });
    SampleSet {
        master_seed,
        samples_per_pair: n,
        counts,
    }
}

/// `P̂(s, a) = counts / N`, with the true (known) rewards.
pub fn empirical_model(samples: &SampleSet, rewards: &[f64], actions_per_state: &[usize]) -> Result<MdpModel> {
    let n = samples.samples_per_pair;
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    let num_states = actions_per_state.len();
    let transitions = samples
        .counts
        .iter()
        .map(|row| {
            let mut p: Vec<f64> = row.iter().map(|&c| c as f64 / n as f64).collect();
            // Put the rounding residue on the largest entry so rows sum to 1.
            let sum: f64 = p.iter().sum();
            if let Some(imax) = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])) {
                p[imax] += 1.0 - sum;
            }
            p
        })
        .collect();
    MdpModel::new(num_states, actions_per_state.to_vec(), transitions, rewards.to_vec())
        .map_err(|e| Error::SampleMismatch(e.to_string()))
}

/// Empirical model for the model the samples were drawn from.
pub fn empirical_model_for(samples: &SampleSet, model: &MdpModel) -> Result<MdpModel> {
    samples.check_against(model)?;
    empirical_model(samples, model.rewards(), model.actions_per_state())
}
