//! Quantized electromagnetic fields driven by classical conserved currents.
//!
//! Coherent-state expectation values are built from per-mode displacement
//! amplitudes on a periodic box lattice and cross-checked against a classical
//! retarded-integral solver.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::Vector3;
use num_complex::Complex64;

pub mod error;
pub mod field_dynamics;
pub mod mode_basis;
pub mod quadrature;
pub mod radiation;
pub mod retarded;
pub mod scenario;
pub mod shells;
pub mod single_mode;
pub mod sources;
pub mod special;
pub mod uncertainty;
pub mod units;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

pub use error::{Error, Result};
pub use units::{Tolerances, UnitMode, UnitSystem};
