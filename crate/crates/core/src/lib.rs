//! Time-changed Brownian motion toolkit.
//!
//! Simulates `M_t = W(Λ_t)` for strictly increasing, right-continuous
//! time-changes `Λ` with finitely many jumps, checks the forward and backward
//! change-of-variable identities between integrals against `M` (physical
//! time) and against `W` (market time), and builds the closed-form
//! power-utility strategies in both filtrations together with Monte Carlo
//! checks of their optimality.
//!
//! Module map:
//!
//! * [`timechange`]: time-change paths, sampling, generalized inverse.
//! * [`paths`]: aligned grids, Brownian paths, `M`, the drift `A`, `S`.
//! * [`integrate`]: discrete Itô integrals, push-forward / pull-back,
//!   stochastic exponentials and change-of-variable verification.
//! * [`portfolio`]: market scenario, utility, optimal strategies, wealth.
//! * [`harness`]: Monte Carlo ensembles, estimators and the optimality,
//!   conditional-value and tower checks.
//! * [`config`] and [`commands`]: run configuration and CLI commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod paths;
pub mod portfolio;
pub mod rng;
pub mod timechange;

pub use error::{Error, Result};
