//! Effective-mass homogenization of nonlinear Schrödinger equations with a
//! highly oscillatory periodic potential.
//!
//! The crate covers the whole numerical pipeline:
//!
//! * [`lattice`], [`potential`], [`basis`], [`bands`]: Bloch's cell problem in
//!   a plane-wave basis, band energies, group velocities, effective mass
//!   tensors and k-derivatives of Bloch waves.
//! * [`effective`]: the homogenized constants of the effective-mass NLS.
//! * [`grid`]: periodic sample grids, FFTs and spectral calculus.
//! * [`correctors`]: multiple-scales correctors and well-prepared initial data.
//! * [`fine`], [`effective_nls`]: split-step solvers for the two-scale NLS and
//!   its homogenized limit.
//! * [`asymptotics`]: asymptotic solutions and error norms.
//! * [`harness`]: convergence sweeps and preparation studies.
//!
//! Nothing in this crate performs IO.

pub mod asymptotics;
pub mod bands;
pub mod basis;
pub mod correctors;
pub mod effective;
pub mod effective_nls;
mod error;
pub mod fine;
pub mod grid;
pub mod harness;
pub mod lattice;
pub mod potential;
mod split;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
