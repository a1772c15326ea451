//! Simulation-based statistics primitives.
//!
//! The crate covers the verification and checking side of a simulation-based
//! workflow: simulation-based calibration (prior and posterior), frequentist
//! calibration, power and accuracy studies, Monte Carlo hypothesis tests,
//! predictive checks, rejection ABC, naive evidence estimation, power-scaling
//! sensitivity and prior elicitation by simplex search.
//!
//! Everything is `no_std` + `alloc`. With the default `std` feature the
//! embarrassingly parallel loops run on rayon; results are keyed by task
//! index and every task draws from its own derived random stream, so output
//! does not depend on the number of worker threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod approx;
pub mod calibration;
pub mod compare;
pub mod data;
pub mod diagnostics;
pub mod elicitation;
mod error;
pub mod model;
pub mod par;
pub mod predictive;
mod prelude;
pub mod rng;
pub mod sensitivity;
pub mod simtest;
pub mod special;
pub mod statistic;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{Seed, SimRng};
