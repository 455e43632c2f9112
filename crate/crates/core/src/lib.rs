// SPDX-License-Identifier: Apache-2.0

//! Delay models and timely-progress bounds for the Two-Phase Acknowledge
//! (TAP) knowledge-propagation protocol.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`analytic`]: exponential and Erlang CDFs, the multicopy two-hop relay
//!   (MTR) delivery CDF, M/M/1 steady-state quantities and the Erlang-product
//!   progress bound.
//! * [`tap`]: propagator and replica state machines and a trace driver.
//! * [`mtr`]: Monte Carlo sampler for MTR delivery delays.
//! * [`mm1`]: a FIFO single-server queue simulator with Little's-law
//!   bookkeeping.
//! * [`engine`]: the end-to-end harness composing the above into worst-case
//!   progress-time samples and bound reports.
//! * [`stats`] and [`rng`]: empirical CDFs, DKW/KS tooling and seeded
//!   splittable random streams.
//!
//! IO, config files and parallel execution live in the `tapbound` crate.

#![no_std]

extern crate alloc;

pub mod analytic;
pub mod engine;
mod error;
pub mod mm1;
pub mod mtr;
pub mod rng;
pub mod stats;
pub mod tap;

pub use error::{Error, Result};
