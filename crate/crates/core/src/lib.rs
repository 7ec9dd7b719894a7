//! Sequential CHSH Bell experiments under local hidden variable models.
//!
//! The crate plays strategies (memoryless, one-sided or two-sided memory,
//! collective, and a quantum reference sampler) against uniformly random
//! measurement settings and evaluates the two CHSH statistics:
//!
//! * `X_N`, the sum of the four empirical conditional frequencies, and
//! * `Y_N`, four times the fraction of rounds that match the CHSH pattern.
//!
//! [`enumerator`] computes exact expectations by walking all 4^N setting
//! sequences, [`montecarlo`] estimates them for large N from seeded batches,
//! and [`bounds`] evaluates the analytic tail and expectation bounds the
//! simulations are compared against.

pub mod bounds;
pub mod domain;
pub mod enumerator;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod rational;
pub mod statistics;
pub mod strategies;

pub use domain::{
    memory_view, AliceSetting, BobSetting, MemoryClass, MemoryView, Outcome, PairCounts, Round,
    SettingPair, Side, Transcript,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use rational::Rational;
