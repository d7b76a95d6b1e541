//! Non-binary LDPC codes over GF(2^m): zigzag-cycle analysis of belief
//! propagation, error-floor bounds and Monte-Carlo simulation.

pub mod analysis;
pub mod channel;
pub mod decoder;
pub mod error;
pub mod gf;
pub mod graph;
pub mod sim;

pub use error::{Error, Result};
