//! Exact computation of bias, Gowers-type uniformity and rank notions for
//! polynomials over finite fields and the rings `Z/p^l`.

pub mod algebra;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod linalg;
pub mod nullstellensatz;
pub mod padic;
pub mod poly;
pub mod rank;
pub mod universality;

pub use error::{Error, Result};
