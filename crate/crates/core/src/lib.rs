//! Verification engines for Griffiths correlation inequalities of
//! non-interacting O(n) rotors and ferromagnetic Gaussian spins.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod basis;
pub mod chernoff;
pub mod convergence;
pub mod error;
pub mod expm;
pub mod gaussian;
pub mod griffiths;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod quadrature;
pub mod rational;
pub mod suite;
pub mod wick;
pub mod zonal;

pub use algebra::{Coeff, DotMonomial, ExactPoly, FloatPoly, Mode, ModelDims, Polynomial, SitePair};
pub use error::{Error, Result};
