//! Channel acquisition library for massive MIMO-OFDM uplinks.
//!
//! The crate models sparse multipath channels on a triple-beam (angle, delay,
//! Doppler) grid, generates time-frequency phase-shifted pilots, schedules
//! them across user terminals to minimize overlap, estimates the aggregate
//! beam-domain channel with either a dense MMSE solve or an iterative
//! natural-parameter method with an FFT fast path, and drives Monte-Carlo
//! NMSE experiments.

pub mod error;
pub mod channel;
pub(crate) mod linalg;
pub mod estimator;
pub mod harness;
pub mod pilot;
pub mod scheduler;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
