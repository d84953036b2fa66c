//! The three-level lower-bound family and its calculators.
//!
//! First-level states choose among `K` arms. Each arm leads to its own
//! second-level state, which pays by staying put with probability
//! `γ_lb·p_arm`; telling the best arm apart from the rest takes on the order
//! of `1/((1−γ_lb)ε²)` samples per arm.

mod bounds;
mod instance;
mod random;

pub use bounds::{
    bernoulli_kl, distinguisher_experiment, distinguisher_experiment_with, gain_gap, kl_and_threshold,
    kl_and_threshold_with, DistinguisherOutcome, KlThreshold, DEFAULT_C_LB,
};
pub use instance::{
    build_hard_instance, closed_form_gain, stationary_closed_form, Case, GroundTruth, HardInstanceSpec,
    PlantedState, MAX_EPS, MIN_GAMMA_LB,
};
pub use random::{
    random_mixing_bound, random_mixing_model, two_step_decomposition_check, two_step_decomposition_check_with,
};

/// Explicit constant in the mixing bound `t_mix ≤ 8/(1−γ_lb)` for built
/// instances.
pub const HARD_MIXING_CONSTANT: f64 = 8.0;
