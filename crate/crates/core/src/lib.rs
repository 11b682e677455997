//! Matrix-free numerics for transverse-field p-spin glasses on the hypercube
//! `Q_N = {−1, 1}^N`: Gaussian disorder sampling, the operator
//! `H = U + ΓT`, pressures by dense diagonalization and stochastic Lanczos
//! quadrature, the limiting quantum REM formulas and bounds, deviation-set
//! geometry, and a reproducible experiment harness.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the double-precision types used by the harness.

pub mod analytics;
pub mod disorder;
pub mod error;
pub mod free_energy;
pub mod geometry;
pub mod harness;
pub mod hamiltonian;
pub mod krylov;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{ModelKind, ModelParameters, Order, SpinConfiguration};
pub use scalar::Real;

pub type Field = disorder::DisorderField<f64>;
pub type Field32 = disorder::DisorderField<f32>;
pub type Hamiltonian<'a> = hamiltonian::Hamiltonian<'a, f64>;
pub type Hamiltonian32<'a> = hamiltonian::Hamiltonian<'a, f32>;
pub type PressureEstimate = free_energy::PressureEstimate<f64>;
pub type Spectrum = free_energy::Spectrum<f64>;
pub type PhasePoint = analytics::PhasePoint<f64>;
