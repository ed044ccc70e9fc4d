//! Capacity bounds for memoryless finite-state multiple-access channels (FS-MACs)
//! whose two encoders see asymmetric, noisy, causal observations of an i.i.d.
//! channel state while the decoder sees the state itself.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: problem instances, validation, and the induced channel from
//!   strategy pairs to outputs.
//! - [`strategy`]: Shannon strategies (maps from an encoder's observation to
//!   its channel input) and their mixed-radix ids.
//! - [`rates`]: the factorised joint law of a team policy and the three
//!   mutual-information bounds that make up its rate pentagon.
//! - [`optimize`]: sum-rate maximisation, an exhaustive grid oracle, and the
//!   convex-hull inner bound region.
//! - [`converse`]: brute-force checks of the sum-rate converse machinery on
//!   explicit encoder tables.
//! - [`mcsim`]: a random-coding simulator with a joint-typicality decoder.
//!
//! Work items that are independent (optimizer restarts, region directions,
//! simulation trials, converse cases) run through [`par`], which uses rayon
//! when the `parallel` feature is on and plain iteration otherwise. Results
//! never depend on the thread count.

pub mod converse;
pub mod error;
pub mod mcsim;
pub mod model;
pub mod optimize;
pub mod par;
pub mod rates;
pub mod rng;
pub mod strategy;

pub use error::{Error, Result};
pub use model::{CondPmf, FsMacSpec, Pmf, StrategyCaps, StrategyChannel};
pub use rates::{JointLaw, RatePentagon, TeamPolicy};
pub use strategy::{Strategy, StrategySpace};

/// Tolerance on row sums when validating probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-9;
