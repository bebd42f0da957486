//! Noncooperative energy-efficient power control for the uplink of an
//! impulse-radio UWB network with Rake receivers.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`] draws tapped-delay-line multipath realizations.
//! - [`rake`] forms Rake combining weights and the signal, self-interference
//!   and multiple-access-interference gains of one realization.
//! - [`game`] holds the utility model, the target-SINR solver, best responses
//!   and the feasibility / minimum-power test.
//! - [`brpc`] iterates best responses to the unique Nash equilibrium.
//! - [`lsa`] evaluates the large-system limits and closed-form predictions.
//! - [`social`] computes the SINR-balanced social optimum.
//! - [`harness`] runs seeded Monte-Carlo experiments from scenario files.

pub mod brpc;
pub mod channel;
pub mod error;
pub mod game;
pub mod harness;
pub mod lsa;
pub mod rake;
pub mod rng;
pub mod social;

pub use error::{Error, Result};
pub use game::{EfficiencyModel, GameParams, SiRatio};
