//! Tabular MDPs, exact policy evaluation, and mixing times.

mod chain;
mod eval;
mod mixing;
mod model;
mod oracle;
mod policy;

pub use chain::{induce_chain, InducedChain};
pub use eval::{
    average_values, chain_gain, discounted_values, gain, policy_discounted_values,
    stationary_distribution, Discount, ValueVector, DEFAULT_STATIONARY_TOL, SQUARING_MAX_STATES,
};
pub use mixing::{
    distance_profile, mixing_time, model_mixing_time, model_mixing_time_with, MixingReport,
    ModelMixingReport, DEFAULT_ENUMERATION_CAP,
};
pub use model::{MdpModel, RawModel};
pub use oracle::{
    brute_force_optimal_gain, brute_force_optimal_gain_with, exact_dmdp_optimal, value_iteration,
    ValueIterationRun, DEFAULT_VI_MAX_ITERS, GAIN_TIE_TOL,
};
pub use policy::{enumerate_policies, DeterministicPolicy, Policy, RandomizedPolicy};
