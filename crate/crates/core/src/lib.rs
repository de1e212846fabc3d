//! Pseudospectral simulation and verification toolkit for the nonlinear
//! Schrödinger equation `i u_t + Δu + κ|u|^α u = 0` with complex `κ`.

// `!(x > 0.0)` is deliberate throughout: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod conformal;
pub mod diagnostics;
pub mod exponents;
pub mod field;
pub mod harness;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod solver;

pub use exponents::ModelParams;
pub use field::{FieldState, GridSpec, InitialDataSpec};
