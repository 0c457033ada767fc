//! Scattering solutions and Born approximation for the magnetic Schrödinger
//! operator H = -(∇ + iW)² + V in dimensions 2 and 3.
//!
//! The library discretizes the Lippmann–Schwinger integral equation
//! u_sc = ũ₀ + L_k u_sc on a truncated box, solves it by Born iteration or a
//! matrix-free Krylov method, extracts far-field scattering amplitudes, and
//! evaluates the first- and second-order Born approximations including the
//! four Fourier-domain correction terms and a first-order backscattering
//! inversion of q̃ = |W|² + V.

pub mod born;
pub mod error;
pub mod farfield;
pub mod fields;
pub mod fft;
pub mod ls;
pub mod special;

pub use error::MagError;
pub use fields::{Grid, PotentialData, PotentialSpec, ScalarFamily, WeightedNormParams};
pub use ls::{QuadratureMode, ScatteringSolution, SolveMethod};

pub type Complex = num_complex::Complex64;
