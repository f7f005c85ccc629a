//! Numerical laboratory for magnetic Dirac operators at the threshold
//! energies `±m`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spinor`]: Pauli/Dirac matrices and 2-/4-spinor arithmetic.
//! * [`potentials`]: the Loss–Yau vector potential and its scaled, gauged,
//!   Adam–Muratori–Nash and sampled variants, plus decay classification.
//! * [`analytic`]: closed-form zero modes, their lift to `±m` modes and the
//!   asymptotic limit `u±(ω)` of `r² f(rω)`.
//! * [`grid`]: Fourier-spectral discretization on a periodic cube.
//! * [`spectral`]: shift-invert Lanczos eigenprobes, gap scans, Weyl
//!   quasi-modes, decay fits and coupling scans.
//!
//! With the default `parallel` feature, FFT slabs, pointwise loops and
//! quadrature shells run on rayon; without it every loop is sequential and
//! produces bit-identical results.

pub mod analytic;
pub mod error;
pub mod exec;
pub mod fft;
pub mod grid;
pub mod io;
pub mod potentials;
pub mod quadrature;
pub mod spectral;
pub mod spinor;

pub use error::{DtlError, Result};
pub use spinor::{Matrix2c, Matrix4c, RealVec3, SpinorC2, SpinorC4, C64};

/// Library version recorded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
