use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed model, policy, or parameter.
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("{name} = {value} is outside the admissible range {range}")]
    Range {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("no unique stationary distribution detected after {iterations} iterations (residual {residual:.3e})")]
    NoStationary { iterations: usize, residual: f64 },

    #[error("mixing time exceeds budget: distance {distance:.6} > 1/2 at t = {max_t}")]
    MixingBudget { max_t: usize, distance: f64 },

    #[error("{count} deterministic policies exceed the enumeration cap {cap}; use a sampled-policy bound instead")]
    EnumerationCap { count: u128, cap: u64 },

    #[error("empty sample set: samples_per_pair is 0")]
    EmptySampleSet,

    #[error("sample set does not match model: {0}")]
    SampleMismatch(String),

    #[error("value iteration did not reach tolerance within {max_iters} iterations (last step {last_step:.3e})")]
    IterationCap { max_iters: usize, last_step: f64 },
}

impl Error {
    pub(crate) fn validation(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn range(name: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Range {
            name,
            value,
            range: range.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by a computation
    /// that failed on valid inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Range { .. }
                | Error::EmptySampleSet
                | Error::SampleMismatch(_)
                | Error::EnumerationCap { .. }
        )
    }
}
