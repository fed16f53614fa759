// Exact rationals make errors and verdicts wide; the copies are cheap next to the arithmetic.
#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod continuum;
pub mod equalizer;
pub mod error;
pub mod io;
pub mod loss;
pub mod measure;
pub mod oracle;
pub mod rational;
pub mod selftest;
pub mod subset_algebra;
pub mod transport;
pub mod witness;

pub use error::{Error, Result};
pub use rational::Rational;
