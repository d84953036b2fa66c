use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::instance::HardInstanceSpec;
use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::mdp::{induce_chain, MdpModel, Policy};

const TWO_STEP_SLACK: f64 = 1e-12;

fn simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random MDP whose rows are `(1−β)·q + β·ρ`, with each `q` uniform on the
/// simplex and one restart density `ρ` shared by the whole model. Every
/// policy's chain then mixes within `⌈ln 4 / β⌉` steps. Rewards are uniform
/// on `[0, 1]`.
pub fn random_mixing_model(seed: u64, num_states: usize, actions_per_state: &[usize], beta: f64) -> Result<MdpModel> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::range("beta", beta, "(0, 1]"));
    }
    if num_states == 0 || actions_per_state.len() != num_states {
        return Err(Error::validation(
            "random model",
            "actions_per_state must have one positive entry per state",
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let restart = simplex_point(&mut rng, num_states);
    let total: usize = actions_per_state.iter().sum();
    let mut transitions = Vec::with_capacity(total);
    let mut rewards = Vec::with_capacity(total);
    for _ in 0..total {
        let q = simplex_point(&mut rng, num_states);
        let mut row: Vec<f64> = q.iter().zip(&restart).map(|(a, b)| (1.0 - beta) * a + beta * b).collect();
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
        transitions.push(row);
        rewards.push(rng.random::<f64>());
    }
    let model = MdpModel::new(num_states, actions_per_state.to_vec(), transitions, rewards)?;
    Ok(model.with_meta(serde_json::json!({
        "random_mixing": { "seed": seed, "beta": beta }
    })))
}

/// `⌈ln 4 / β⌉`.
pub fn random_mixing_bound(beta: f64) -> usize {
    (4f64.ln() / beta).ceil() as usize
}

/// True iff every entry of `(P^π)²` in an `X¹` column is at least
/// `γ_lb(1−γ_lb)/N`, the uniform-restart mass two steps always carry.
pub fn two_step_decomposition_check_with<P: Policy + ?Sized>(
    model: &MdpModel,
    policy: &P,
    n: usize,
    gamma_lb: f64,
) -> Result<bool> {
    if n == 0 || n > model.num_states() {
        return Err(Error::validation("two-step check", format!("N = {n} does not fit the model")));
    }
    let chain = induce_chain(model, policy)?;
    let p: &DMatrix<f64> = chain.transition();
    let p2 = p * p;
    let floor = gamma_lb * (1.0 - gamma_lb) / n as f64 - TWO_STEP_SLACK;
    Ok((0..n).all(|j| p2.column(j).iter().all(|&x| x >= floor)))
}

/// [`two_step_decomposition_check_with`] using the parameters the
/// hard-instance builder wrote into the model's metadata.
pub fn two_step_decomposition_check<P: Policy + ?Sized>(model: &MdpModel, policy: &P) -> Result<bool> {
    let spec = HardInstanceSpec::from_meta(model)?;
    two_step_decomposition_check_with(model, policy, spec.n, spec.gamma_lb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hard::build_hard_instance;
    use crate::mdp::{enumerate_policies, model_mixing_time, DeterministicPolicy};

    #[test]
    fn memoryless_when_beta_is_one() {
        let m = random_mixing_model(3, 4, &[2; 4], 1.0).unwrap();
        let first = m.transitions()[0].clone();
        for row in m.transitions() {
            for (a, b) in row.iter().zip(&first) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert_eq!(model_mixing_time(&m, 100).unwrap().report.mixing_time, 1);
    }

    #[test]
    fn mixing_bound_holds_at_half() {
        assert_eq!(random_mixing_bound(0.5), 3);
        for seed in 0..10 {
            let m = random_mixing_model(seed, 4, &[2; 4], 0.5).unwrap();
            assert!(model_mixing_time(&m, 100).unwrap().report.mixing_time <= 3);
        }
        assert!(random_mixing_model(0, 2, &[1, 1], 0.0).is_err());
    }

    #[test]
    fn two_step_on_hard_and_identity() {
        let spec = HardInstanceSpec::random(2, 2, 0.5, 1.0 / 32.0, 4).unwrap();
        let (m, _) = build_hard_instance(&spec).unwrap();
        for pi in enumerate_policies(&m) {
            assert!(two_step_decomposition_check(&m, &pi).unwrap());
            let p2 = {
                let c = induce_chain(&m, &pi).unwrap();
                c.transition() * c.transition()
            };
            let min = (0..2).flat_map(|j| p2.column(j).iter().copied().collect::<Vec<_>>()).fold(f64::INFINITY, f64::min);
            assert!(min >= 0.125 - 1e-12);
        }
        let id = MdpModel::new(2, vec![1, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2]).unwrap();
        assert!(!two_step_decomposition_check_with(&id, &DeterministicPolicy::new(vec![0, 0]), 2, 0.5).unwrap());
        assert!(two_step_decomposition_check(&id, &DeterministicPolicy::new(vec![0, 0])).is_err());
    }
}
