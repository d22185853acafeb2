//! Kronecker-product factorizations of the discrete Fourier transform.
//!
//! The crate builds the radix-`d` FFT factorization of `F_{d^n}` as a
//! sequence of structured (sum-of-Kronecker-term) operators, refines it into
//! one- and two-site factors, lowers those to a QFT gate circuit, and tracks
//! how a sum-of-rank-1 state grows under the factors. Every structured
//! result can be checked against a dense oracle up to a configurable size.

pub mod circuit;
pub mod cli;
pub mod cp;
pub mod error;
pub mod factor;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};

/// Version tag written into plan and circuit JSON documents.
pub const SCHEMA_VERSION: u32 = 1;
