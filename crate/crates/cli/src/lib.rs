//! Command-line driver and experiment harnesses.
//!
//! Every output is a pure function of its inputs and master seed: trial
//! seeds are derived from `(master_seed, cell, trial)` and rows are merged
//! in grid order, so the thread count never changes a byte of output.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
