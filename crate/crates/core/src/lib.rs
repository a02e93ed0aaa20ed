//! Superadiabatic representations, transmitted wave packets and transition
//! histories for one-dimensional two-level semiclassical Schrödinger systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: the diabatic potential family and its adiabatic frame.
//! * [`spectral`]: periodic grids, the ε-scaled Fourier transform, Moyal terms
//!   and Weyl quantization of symbols polynomial in momentum.
//! * [`superadiabatic`]: the coefficient recursion for the superadiabatic
//!   projections and couplings.
//! * [`dynamics`]: a Strang split-step reference solver.
//! * [`transition`]: closed-form transmitted packets, perturbative histories
//!   and the optimal representation.
//! * [`harness`]: configuration, sweeps, histories and the verification suites.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod model;
pub mod spectral;
pub mod superadiabatic;
pub mod transition;

pub use error::{Error, Result};
pub use num_complex::Complex64;
