//! Shared foundations: lattices and rational edges, media, quadrature and Hermitian linear algebra.

pub mod error;
pub mod lattice;
pub mod linalg;
pub mod media;
pub mod pauli;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
