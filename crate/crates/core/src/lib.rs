//! Robust two-sample tests built on generalized S-Bregman mutual information.

pub mod density;
pub mod divergence;
pub mod error;
pub mod io;
pub mod rng;
pub mod robustness;
pub mod sim;
pub mod tuning;
pub mod two_sample;

pub use error::{Error, Result};
