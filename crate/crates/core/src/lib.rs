//! Desk-scale construction of smooth bi-Carleman integral kernels.
//!
//! Given a finite family of bounded operators whose action decays along an
//! orthonormal sequence, this crate builds the explicit unitary that carries
//! every family member (and its two-sided multiplicative neighborhood) onto
//! integral operators with arbitrarily smooth kernels, then verifies each
//! asserted property numerically.

pub mod basis;
pub mod bell;
pub mod config;
pub mod error;
pub mod fileio;
pub mod operator;
pub mod pairing;
pub mod quad;
pub mod synth;
pub mod transform;
pub mod verify;
pub mod wavelet;

pub use error::{Error, Result};
pub use wavelet::C64;
