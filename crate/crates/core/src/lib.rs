//! Exact generation and testing of equidistributed sequences modulo one.
//!
//! Sequences `beta_k = x_k(t) mod 1` are generated for rational seeds
//! `t = p/q` with a large prime `q`, windowed into d-dimensional points, and
//! examined with Weyl sums, discrepancy computations and Monte Carlo over
//! seeds.

pub mod arithmetic;
pub mod checkpoints;
pub mod discrepancy;
pub mod error;
pub mod generators;
pub mod sample;
pub mod stochastic;
pub mod summation;
pub mod weyl;

pub use error::{Error, Result};
