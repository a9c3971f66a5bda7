//! Evaluation toolkit for Sudler trigonometric products, the figure-eight
//! knot invariant `J_{4_1,0}` at roots of unity, and their growth constants
//! along continued-fraction convergents of quadratic irrationals.
//!
//! The crate is organized around a small set of exact objects (reduced
//! rationals, periodic continued fractions, convergent tables, spectral data
//! of the period) and log-domain streaming evaluation of the products built
//! on top of them.

pub mod cf;
pub mod constants;
pub mod convergents;
pub mod error;
pub mod fixed;
pub mod identities;
pub mod limitfn;
pub mod ostrowski;
pub mod quadrature;
pub mod spectral;
pub mod sudler;
pub mod surd;

pub use cf::{cf_of_rational, CfTarget, QuadraticIrrational, Rational};
pub use convergents::{default_precision_bits, evaluate_surd, ConvergentTable};
pub use error::{Error, Result};
pub use spectral::{spectral, SpectralData};
