//! Lattice-point invariants of normed ℤ-modules.

pub mod curve;
pub mod error;
pub mod gs;
pub mod interval;
pub mod lattice;
pub mod lp;
pub mod module;
pub mod norm;
pub mod p1;
pub mod polytope;
pub mod rational;
pub mod sample;
pub mod ring;
pub mod volume;

pub use error::{Error, Result};
