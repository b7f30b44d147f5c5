//! Sparse spectral fine-tuning adapters.
//!
//! The core idea: instead of learning a dense weight update, learn `n`
//! coefficients at fixed random positions in the 2D frequency plane and
//! recover the update with a normalized inverse DFT. The crate ships the
//! transform stack ([`dft`]), entry sampling with an optional band-pass
//! frequency bias ([`sampling`]), the adapter parameterizations and budget
//! calculator ([`adapter`]), a compact checkpoint format that stores only
//! the seed and the coefficients ([`checkpoint`]), a small training
//! harness for the synthetic 8-class experiment ([`train`]), and the CLI
//! ([`cli`]).

pub mod adapter;
pub mod checkpoint;
pub mod cli;
pub mod dft;
pub mod error;
pub mod linalg;
pub mod sampling;
pub mod train;

pub use error::{Error, Result};
