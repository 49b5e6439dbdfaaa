//! Numerical laboratory for nonunitary Newtonian gravity (NNG).
//!
//! A physical system is accompanied by `N - 1` hidden replicas ("colours")
//! that interact with it only gravitationally. For finite `N` the hidden
//! sector dephases superpositions of localized mass states; as `N -> inf`
//! the Newton-Schrodinger mean-field dynamics is recovered.
//!
//! Modules:
//! - [`units`]: constants, dimension-checked quantities, characteristic scales.
//! - [`metastate`]: two-branch N-replica metastate coefficients.
//! - [`kernel`]: mass profiles, the mutual gravitational integral and phases.
//! - [`reduction`]: decoherence matrix elements, the N=2 oracle, reduction times.
//! - [`interdiction`]: the EPR no-signalling scan.
//! - [`phone`]: the two-replica Everett-phone protocol.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod interdiction;
pub mod kernel;
pub mod metastate;
pub mod phone;
pub mod reduction;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
