//! Polynomial Killing fields of the elliptic sinh-Gordon equation.
//!
//! Potentials, their commuting flows and spectral quartics; period lattices
//! of the spectral curves of genus one and two; conformal classes of the
//! associated tori; the immersions themselves and their Willmore energy.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod genus1_spectral;
pub mod genus2_spectral;
pub mod immersion_willmore;
pub mod io;
pub mod lax_flows;
pub mod modular_lattice;
pub mod ode;
pub mod potentials;
pub mod quaternion;
pub mod weierstrass;

pub use error::{Error, Result};
pub use num_complex::Complex64;
