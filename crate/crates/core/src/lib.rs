//! Set-membership identification of switched linear systems with bounded
//! process noise, and a greedy bandit policy that uses the estimates to find
//! and lock onto a stabilizing subsystem.

pub mod builtin;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod nnls;
pub mod noise;
pub mod policy;
pub mod qp;
pub mod spectral;

pub use error::{Error, Result};
