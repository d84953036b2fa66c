//! Exact policy evaluation: stationary distributions, gains, and discounted
//! values of induced chains.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::chain::{induce_chain, InducedChain};
use super::model::MdpModel;
use super::policy::Policy;
use crate::error::{Error, Result};

pub const DEFAULT_STATIONARY_TOL: f64 = 1e-12;

/// Chains up to this size use repeated squaring; larger ones use vector
/// power iteration.
pub const SQUARING_MAX_STATES: usize = 512;

const MAX_SQUARINGS: usize = 64;
const MAX_VECTOR_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discount {
    Gamma(f64),
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub discount: Discount,
    pub rescaled: bool,
}

impl ValueVector {
    pub fn max_abs_diff(&self, other: &ValueVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn stationarity_residual(nu: &RowDVector<f64>, p: &DMatrix<f64>) -> f64 {
    (nu * p - nu).abs().sum()
}

fn row_spread(m: &DMatrix<f64>) -> f64 {
    let first = m.row(0);
    m.row_iter()
        .map(|r| (r - first).abs().sum())
        .fold(0.0, f64::max)
}

/// Stationary distribution `ν` with `‖νᵀP − νᵀ‖₁ ≤ tol`.
///
/// Small chains square `P` until all rows of `P^(2^k)` agree, which also
/// detects periodic and multi-class chains. Large chains iterate a vector
/// from the uniform start and only check the residual.
pub fn stationary_distribution(chain: &InducedChain, tol: f64) -> Result<Vec<f64>> {
    let p = chain.transition();
    let n = chain.num_states();
    let uniform = RowDVector::from_element(n, 1.0 / n as f64);

    if n <= SQUARING_MAX_STATES {
        let mut m = p.clone();
        let mut residual = f64::INFINITY;
        for k in 0..=MAX_SQUARINGS {
            if row_spread(&m) <= tol {
                let mut nu = &uniform * &m;
                nu /= nu.sum();
                residual = stationarity_residual(&nu, p);
                if residual <= tol {
                    return Ok(nu.iter().copied().collect());
                }
            }
            if k < MAX_SQUARINGS {
                m = &m * &m;
            }
        }
        if !residual.is_finite() {
            residual = row_spread(&m);
        }
        return Err(Error::NoStationary {
            iterations: MAX_SQUARINGS,
            residual,
        });
    }

    let mut nu = uniform;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_VECTOR_ITERS {
        let next = &nu * p;
        residual = (&next - &nu).abs().sum();
        nu = next;
        nu /= nu.sum();
        if residual <= tol {
            return Ok(nu.iter().copied().collect());
        }
    }
    Err(Error::NoStationary {
        iterations: MAX_VECTOR_ITERS,
        residual,
    })
}

/// Long-run average reward `⟨ν^π, r^π⟩` of a chain.
pub fn chain_gain(chain: &InducedChain) -> Result<f64> {
    let nu = stationary_distribution(chain, DEFAULT_STATIONARY_TOL)?;
    Ok(nu.iter().zip(chain.reward().iter()).map(|(a, b)| a * b).sum())
}

pub fn gain<P: Policy + ?Sized>(model: &MdpModel, policy: &P) -> Result<f64> {
    chain_gain(&induce_chain(model, policy)?)
}

/// Average-reward value vector `V^π·1`.
pub fn average_values<P: Policy + ?Sized>(model: &MdpModel, policy: &P) -> Result<ValueVector> {
    let g = gain(model, policy)?;
    Ok(ValueVector {
        values: vec![g; model.num_states()],
        discount: Discount::Average,
        rescaled: true,
    })
}

/// Solves `(I − γP^π) v = r^π`, optionally scaling by `1 − γ`.
pub fn discounted_values(chain: &InducedChain, gamma: f64, rescaled: bool) -> Result<ValueVector> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::range("gamma", gamma, "[0, 1)"));
    }
    let n = chain.num_states();
    let r = chain.reward();
    let mut values = if gamma == 0.0 {
        r.clone()
    } else {
        let a = DMatrix::identity(n, n) - chain.transition() * gamma;
        let lu = a.clone().lu();
        let mut v: DVector<f64> = lu.solve(r).expect("I - γP is nonsingular for γ < 1");
        // One step of iterative refinement.
        let resid = r - &a * &v;
        if let Some(dv) = lu.solve(&resid) {
            v += dv;
        }
        v
    };
    if rescaled {
        values *= 1.0 - gamma;
    }
    Ok(ValueVector {
        values: values.iter().copied().collect(),
        discount: Discount::Gamma(gamma),
        rescaled,
    })
}

pub fn policy_discounted_values<P: Policy + ?Sized>(
    model: &MdpModel,
    policy: &P,
    gamma: f64,
    rescaled: bool,
) -> Result<ValueVector> {
    discounted_values(&induce_chain(model, policy)?, gamma, rescaled)
}
