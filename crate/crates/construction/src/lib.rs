//! Building blocks of the close-to-identity realization: fragmentation of a
//! generated isotopy, the permutation-map tower, and the assembly of the
//! renormalized return map, plus the translation baseline on the torus.

pub mod error;
pub mod fragmentation;
pub mod generator;
pub mod rat;
pub mod nrt;
pub mod realization;
pub mod scaling;
pub mod tower;

pub use error::{BuildError, Result};
