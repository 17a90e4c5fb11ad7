//! Ruin probability for a reserve invested in a risky asset, with two-sided
//! jumps whose sizes have rational Laplace transforms.
//!
//! * [`laws`]: jump-size laws given by a linear ODE and boundary values.
//! * [`sim`]: Monte Carlo for the reserve process.
//! * [`reduction`]: reduction of the integro-differential equation to an ODE.
//! * [`laplace`]: the Laplace-domain equation, indicial roots, Frobenius series.
//! * [`tailfit`], [`config`], [`pipeline`]: tail-exponent fit and scenario runs.

pub mod config;
pub mod error;
pub mod laplace;
pub mod laws;
pub mod pipeline;
pub mod poly;
pub mod quad;
pub mod reduction;
pub mod scalar;
pub mod sim;
pub mod tailfit;
pub mod testfn;

pub use error::{Error, Result};
