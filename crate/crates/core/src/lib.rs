//! Weyl, Livšic and characteristic functions of symmetric operators with
//! deficiency indices (1, 1), their behaviour under real Möbius changes of
//! variable, and finite-dimensional dissipative models used as references.

pub mod charfn;
pub mod error;
pub mod grid;
pub mod herglotz;
pub mod homogeneous;
pub mod io;
pub mod measure;
pub mod mobius;
pub mod oracle;
pub mod quadrature;
pub mod transform;

pub use error::{Error, Result};

pub type Complex = num_complex::Complex64;
