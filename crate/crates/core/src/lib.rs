//! Simulation and analytics for almost lower semicontinuous risk processes
//! modulated by a finite Markov chain.
//!
//! The claim-surplus process `ξ(t)` jumps up by claims (general rational laws)
//! and down by exponentially distributed premiums, with all rates switched by
//! an irreducible chain `x(t)`. The crate offers:
//!
//! * [`model`]: parsing, validation, cumulant, drift and stationary structure;
//! * [`simulate`]: exact event-driven Monte Carlo for ruin, overshoot, deficit,
//!   recovery/red period, two-sided exit and the two-regime modified process;
//! * [`analytic`]: closed-form scalar laws (Lundberg roots, supremum law,
//!   exit-low curve, overshoot law, modified ruin) and matrix fixed points;
//! * [`pricing`]: Gerber–Shiu penalties and perpetual American put prices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod export;
pub mod model;
pub mod poly;
pub mod pricing;
pub mod quad;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{ChainSpec, ClaimLaw, ModelSpec, StateParams, ValidatedModel};
pub use simulate::{McConfig, MCEstimate};
