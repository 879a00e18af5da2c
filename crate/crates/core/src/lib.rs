//! Pseudo-splines of fractional and complex order.
//!
//! The crate evaluates the refinement symbol `H0^{(z,l)}`, runs the
//! Fourier-domain cascade algorithm for the refinable function, builds the
//! three-generator Parseval framelet bank of the unitary extension principle
//! and computes the regularity and approximation exponents of fractional
//! pseudo-splines.

pub mod analysis;
pub mod cascade;
pub mod error;
pub mod frames;
pub mod io;
pub mod special;
pub mod symbol;

pub use error::{Error, Result};
pub use special::ComplexScalar;
pub use symbol::{PseudoSplineOrder, TorusGrid};
