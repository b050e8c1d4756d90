//! Numerical verification of weighted Birman–Hardy–Rellich inequalities with
//! iterated-logarithm refinements.

pub mod exact;
pub mod jet;
pub mod weights;
pub mod quadrature;
pub mod testfunctions;
pub mod verifier;
pub mod corpus;
pub mod sharpness;

pub use rug::Rational;
