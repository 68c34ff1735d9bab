//! Mode structure and coherence of twin beams from degenerate type-I
//! parametric down-conversion in a uniaxial crystal.
//!
//! The crate evaluates the transverse and spectral two-photon amplitudes,
//! Schmidt-decomposes them, and derives mode counts, intensity profiles,
//! auto- and cross-correlation functions and their widths.

pub mod analysis;
pub mod config;
pub mod correlations;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod schmidt;
pub mod selfcheck;
pub mod sweeps;

pub use error::{Error, Result};
pub use num_complex::Complex64;
