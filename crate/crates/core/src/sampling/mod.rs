//! Generative-model access, oblivious sampling, and empirical models.

mod batch;
mod generative;

pub use batch::{
    empirical_model, empirical_model_for, oblivious_batch, oblivious_batch_from, SamplePlan,
    SampleSet,
};
pub use generative::{GenerativeModel, QueryLedger};
