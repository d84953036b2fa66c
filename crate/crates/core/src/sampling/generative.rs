use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::MdpModel;

/// Snapshot of generative-model queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub total_queries: u64,
    pub per_pair_queries: Vec<u64>,
}

/// Generative-model access to an MDP: independent next-state draws for any
/// state-action pair, with a running query count.
///
/// Alias tables are built on first use of each pair. Safe to share across
/// threads.
pub struct GenerativeModel<'m> {
    model: &'m MdpModel,
    tables: Vec<OnceLock<WeightedAliasIndex<f64>>>,
    queries: Vec<AtomicU64>,
}

impl<'m> GenerativeModel<'m> {
    pub fn new(model: &'m MdpModel) -> Self {
        let n = model.total_actions();
        GenerativeModel {
            model,
            tables: (0..n).map(|_| OnceLock::new()).collect(),
            queries: (0..n).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    pub fn model(&self) -> &'m MdpModel {
        self.model
    }

    fn table(&self, pair: usize) -> &WeightedAliasIndex<f64> {
        self.tables[pair].get_or_init(|| {
            WeightedAliasIndex::new(self.model.transitions()[pair].clone())
                .expect("validated transition rows have positive mass")
        })
    }

    pub fn sample_next_state<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let pair = self.model.check_pair(state, action)?;
        self.queries[pair].fetch_add(1, Ordering::Relaxed);
        Ok(self.table(pair).sample(rng))
    }

    /// Draws `n` next states for `pair` and returns the per-state counts.
    pub(crate) fn sample_counts<R: Rng + ?Sized>(&self, pair: usize, n: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.model.num_states()];
        if n == 0 {
            return counts;
        }
        let table = self.table(pair);
        for _ in 0..n {
            counts[table.sample(rng)] += 1;
        }
        self.queries[pair].fetch_add(n, Ordering::Relaxed);
        counts
    }

    pub fn ledger(&self) -> QueryLedger {
        let per_pair_queries: Vec<u64> = self.queries.iter().map(|q| q.load(Ordering::Relaxed)).collect();
        QueryLedger {
            total_queries: per_pair_queries.iter().sum(),
            per_pair_queries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn point_mass_row() {
        let m = MdpModel::new(2, vec![1, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2]).unwrap();
        let g = GenerativeModel::new(&m);
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(g.sample_next_state(0, 0, &mut rng).unwrap(), 0);
        }
        assert_eq!(g.ledger().total_queries, 100);
        assert_eq!(g.ledger().per_pair_queries, vec![100, 0]);
    }

    #[test]
    fn fair_row_frequency() {
        let m = MdpModel::new(2, vec![1, 1], vec![vec![0.5, 0.5]; 2], vec![0.0; 2]).unwrap();
        let g = GenerativeModel::new(&m);
        let mut rng = stream_rng(2, 0);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| g.sample_next_state(0, 0, &mut rng).unwrap() == 0).count();
        // 4σ binomial band: 4·sqrt(0.25/n) = 0.002.
        assert!((zeros as f64 / n as f64 - 0.5).abs() <= 0.002);
    }

    #[test]
    fn three_outcome_row_passes_chi_square() {
        let probs = [0.2, 0.3, 0.5];
        let m = MdpModel::new(3, vec![1, 1, 1], vec![probs.to_vec(); 3], vec![0.0; 3]).unwrap();
        let g = GenerativeModel::new(&m);
        let n = 1_000_000u64;
        let counts = g.sample_counts(0, n, &mut stream_rng(3, 0));
        let chi2: f64 = counts
            .iter()
            .zip(probs)
            .map(|(&c, p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 99.9% quantile of χ² with 2 degrees of freedom is -2 ln(0.001).
        assert!(chi2 < -2.0 * 0.001f64.ln(), "chi2 = {chi2}");
    }

    #[test]
    fn invalid_pair_is_rejected() {
        let m = MdpModel::new(1, vec![1], vec![vec![1.0]], vec![0.0]).unwrap();
        let g = GenerativeModel::new(&m);
        assert!(g.sample_next_state(0, 1, &mut stream_rng(0, 0)).is_err());
        assert!(g.sample_next_state(4, 0, &mut stream_rng(0, 0)).is_err());
        assert_eq!(g.ledger().total_queries, 0);
    }
}
