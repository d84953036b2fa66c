//! Solving mixing average-reward MDPs by reduction to discounted MDPs, and
//! tooling for the matching lower-bound instance family.
//!
//! The pipeline is: draw an oblivious batch of next-state samples from a
//! generative model, build the empirical model, solve the discounted problem
//! with perturbed rewards, and return the greedy deterministic policy. Every
//! quantity along the way has an exact small-scale oracle in [`mdp`].

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod hard;
pub mod mdp;
pub mod reduction;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Exec;
