//! Sums-of-squares certificates and finite-dimensional unitary witnesses for
//! Hermitian matrix polynomials over free groups.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod polytext;
pub mod repsample;
pub mod sdp;
pub mod soscert;
pub mod verify;
pub mod witness;
pub mod words;

pub use algebra::MatrixPolynomial;
pub use error::{Error, Result};
pub use words::ReducedWord;
