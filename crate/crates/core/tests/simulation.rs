//! Rollout checks: simulated long-run averages against exact gains.

use amdplab_core::exec::stream_rng;
use amdplab_core::hard::{build_hard_instance, random_mixing_model, HardInstanceSpec};
use amdplab_core::mdp::{gain, DeterministicPolicy, MdpModel};
use amdplab_core::sampling::GenerativeModel;

/// Batch-means estimate of the long-run average of `reward(s, s')` along
/// one trajectory, with its standard error.
fn batch_means(
    model: &MdpModel,
    policy: &DeterministicPolicy,
    steps_per_batch: usize,
    batches: usize,
    seed: u64,
    reward: impl Fn(usize, usize, usize) -> f64,
) -> (f64, f64) {
    let gm = GenerativeModel::new(model);
    let mut rng = stream_rng(seed, 0);
    let mut s = 0;
    // Burn in.
    for _ in 0..steps_per_batch {
        s = gm.sample_next_state(s, policy.action(s), &mut rng).unwrap();
    }
    let means: Vec<f64> = (0..batches)
        .map(|_| {
            let mut total = 0.0;
            for _ in 0..steps_per_batch {
                let a = policy.action(s);
                let next = gm.sample_next_state(s, a, &mut rng).unwrap();
                total += reward(s, a, next);
                s = next;
            }
            total / steps_per_batch as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

#[test]
fn simulated_average_reward_matches_gain() {
    let m = random_mixing_model(21, 4, &[2; 4], 0.3).unwrap();
    let pi = DeterministicPolicy::new(vec![1, 0, 1, 1]);
    let exact = gain(&m, &pi).unwrap();
    let (mean, se) = batch_means(&m, &pi, 20_000, 30, 5, |s, a, _| m.reward(s, a));
    assert!((mean - exact).abs() <= 4.0 * se + 1e-3, "mean {mean}, gain {exact}, se {se}");
}

#[test]
fn destination_reward_rollout_matches_expected_reward_encoding() {
    // Pay 1 only on an X² self-transition; the built model instead pays the
    // expectation up front. Both must have the same long-run average.
    let spec = HardInstanceSpec::random(2, 2, 0.8, 1.0 / 32.0, 3).unwrap();
    let (m, truth) = build_hard_instance(&spec).unwrap();
    let pi = spec.policy(&truth.optimal_action);
    let x2 = spec.n..spec.n + spec.n * spec.k;
    let (mean, se) = batch_means(&m, &pi, 50_000, 40, 9, |s, _, next| {
        if x2.contains(&s) && next == s {
            1.0
        } else {
            0.0
        }
    });
    let exact = gain(&m, &pi).unwrap();
    assert!((mean - exact).abs() <= 4.0 * se + 1e-3, "mean {mean}, gain {exact}, se {se}");
}
