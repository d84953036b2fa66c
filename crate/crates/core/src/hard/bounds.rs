use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};

/// Constant in the sample threshold `T = ⌈C_lb/((1−γ_lb)ε²)⌉`.
pub const DEFAULT_C_LB: f64 = 0.05;

/// Gain lost at one first-level state by playing the arm with stay
/// parameter `p2` instead of `p1`, all other states fixed:
/// `(1/N)·γ(1−γ)(p1−p2) / ((2−γ)(1−γp1)(1−γp2))` with `γ = γ_lb`.
pub fn gain_gap(p1: f64, p2: f64, gamma_lb: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma_lb) {
        return Err(Error::range("gamma_lb", gamma_lb, "[0, 1)"));
    }
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::range(name, p, "[0, 1]"));
        }
    }
    if p1 < p2 {
        return Err(Error::validation("gain_gap", format!("p1 = {p1} < p2 = {p2}")));
    }
    if n == 0 {
        return Err(Error::validation("gain_gap", "N must be positive"));
    }
    let g = gamma_lb;
    Ok(g * (1.0 - g) * (p1 - p2) / (n as f64 * (2.0 - g) * (1.0 - g * p1) * (1.0 - g * p2)))
}

/// `KL(Bern(q1) ‖ Bern(q2))`.
pub fn bernoulli_kl(q1: f64, q2: f64) -> Result<f64> {
    for (name, q) in [("q1", q1), ("q2", q2)] {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::range(name, q, "(0, 1)"));
        }
    }
    Ok(q1 * (q1 / q2).ln() + (1.0 - q1) * ((1.0 - q1) / (1.0 - q2)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlThreshold {
    /// Self-loop mean of the raised arm, `γ_lb·p*`.
    pub q1: f64,
    /// Self-loop mean of a baseline arm, `γ_lb·p`.
    pub q2: f64,
    pub kl: f64,
    pub threshold: u64,
}

pub fn kl_and_threshold(gamma_lb: f64, eps: f64) -> Result<KlThreshold> {
    kl_and_threshold_with(gamma_lb, eps, DEFAULT_C_LB)
}

pub fn kl_and_threshold_with(gamma_lb: f64, eps: f64, c_lb: f64) -> Result<KlThreshold> {
    if !(gamma_lb > 0.0 && gamma_lb < 1.0) {
        return Err(Error::range("gamma_lb", gamma_lb, "(0, 1)"));
    }
    if !(eps > 0.0) {
        return Err(Error::range("eps", eps, "(0, inf)"));
    }
    if !(c_lb > 0.0) {
        return Err(Error::range("c_lb", c_lb, "(0, inf)"));
    }
    let q1 = gamma_lb * (gamma_lb + 2.0 * eps * (1.0 - gamma_lb));
    let q2 = gamma_lb * gamma_lb;
    let kl = bernoulli_kl(q1, q2)?;
    let raw = c_lb / ((1.0 - gamma_lb) * eps * eps);
    // Values like 0.05/(0.01·0.05²) land a hair above an integer.
    let nearest = raw.round();
    let threshold = if (raw - nearest).abs() <= 1e-9 * raw { nearest } else { raw.ceil() };
    Ok(KlThreshold {
        q1,
        q2,
        kl,
        threshold: threshold as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinguisherOutcome {
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
}

pub fn distinguisher_experiment(gamma_lb: f64, eps: f64, t: u64, trials: u64, seed: u64) -> Result<DistinguisherOutcome> {
    distinguisher_experiment_with(gamma_lb, eps, t, trials, seed, Exec::default())
}

/// Guesses whether `T` Bernoulli draws came from `γ_lb·p*` or `γ_lb·p`
/// by comparing the sample mean with the midpoint of the two. Each trial
/// picks the truth with a fair coin; ties and `T = 0` are settled by another
/// coin. Trial `j` uses stream `j` of `seed`.
pub fn distinguisher_experiment_with(
    gamma_lb: f64,
    eps: f64,
    t: u64,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<DistinguisherOutcome> {
    let kt = kl_and_threshold(gamma_lb, eps)?;
    if trials == 0 {
        return Err(Error::validation("distinguisher", "trials must be positive"));
    }
    let hi = Binomial::new(t, kt.q1).map_err(|e| Error::validation("distinguisher", e.to_string()))?;
    let lo = Binomial::new(t, kt.q2).map_err(|e| Error::validation("distinguisher", e.to_string()))?;
    let midpoint = 0.5 * (kt.q1 + kt.q2) * t as f64;
    let wrong = exec.map(trials as usize, |j| {
        let mut rng = stream_rng(seed, j as u64);
        let raised = rng.random::<bool>();
        let successes = if raised { hi.sample(&mut rng) } else { lo.sample(&mut rng) } as f64;
        let guess = if successes > midpoint {
            true
        } else if successes < midpoint {
            false
        } else {
            rng.random::<bool>()
        };
        guess != raised
    });
    let errors = wrong.into_iter().filter(|&w| w).count() as u64;
    Ok(DistinguisherOutcome {
        trials,
        errors,
        error_rate: errors as f64 / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gap_basics() {
        assert_eq!(gain_gap(0.7, 0.7, 0.5, 3).unwrap(), 0.0);
        assert!(gain_gap(0.5, 0.6, 0.5, 1).is_err());
        let one = gain_gap(0.515625, 0.5, 0.5, 1).unwrap();
        let two = gain_gap(0.515625, 0.5, 0.5, 2).unwrap();
        assert_eq!(two * 2.0, one);
    }

    #[test]
    fn kl_worked_example() {
        let kt = kl_and_threshold(0.9, 0.1).unwrap();
        assert_abs_diff_eq!(kt.q1, 0.828, epsilon = 1e-12);
        assert_abs_diff_eq!(kt.q2, 0.81, epsilon = 1e-12);
        // 0.828 ln(0.828/0.81) + 0.172 ln(0.172/0.19)
        let direct = 0.828f64 * (0.828f64 / 0.81).ln() + 0.172f64 * (0.172f64 / 0.19).ln();
        assert_abs_diff_eq!(kt.kl, direct, epsilon = 1e-15);
        // Direct evaluation gives 1.0794e-3, about 1% under the rounded 1.09e-3.
        assert!((kt.kl / 1.09e-3 - 1.0).abs() < 0.01);
    }

    #[test]
    fn kl_vanishes_and_obeys_chi_square_bound() {
        assert!(kl_and_threshold(0.9, 1e-9).unwrap().kl < 1e-15);
        for g in [0.5, 0.7, 0.9, 0.99] {
            for eps in [0.001, 0.01, 1.0 / 32.0] {
                let kt = kl_and_threshold(g, eps).unwrap();
                assert!(kt.kl <= (kt.q1 - kt.q2).powi(2) / (kt.q2 * (1.0 - kt.q2)));
            }
        }
        assert!(bernoulli_kl(1.0, 0.5).is_err());
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(kl_and_threshold(0.99, 0.05).unwrap().threshold, 2000);
        assert_eq!(kl_and_threshold_with(0.5, 0.1, 0.0301).unwrap().threshold, 7);
    }

    #[test]
    fn no_information_means_coin_flip() {
        let out = distinguisher_experiment(0.9, 0.01, 0, 20_000, 5).unwrap();
        // 4σ band for a fair coin over 20000 trials.
        assert!((out.error_rate - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    }

    #[test]
    fn execution_mode_does_not_change_result() {
        let a = distinguisher_experiment_with(0.9, 0.02, 300, 500, 9, Exec::Sequential).unwrap();
        let b = distinguisher_experiment_with(0.9, 0.02, 300, 500, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
