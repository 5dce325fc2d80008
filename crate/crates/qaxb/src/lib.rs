//! Desk-scale numerics for the quantum "ax+b" group.
//!
//! The crate is layered bottom-up:
//! [`deformation`] evaluates the special functions, [`linalg`] supplies lattices,
//! operators and spectral calculus, [`pairs`] builds M-pairs and G-triples,
//! [`group`] holds the multiplicative unitary and comultiplication, and
//! [`reps`] builds, verifies and decomposes unitary representations.

pub mod convergence;
pub mod deformation;
pub mod group;
pub mod linalg;
pub mod oracle;
pub mod pairs;
pub mod par;
pub mod reps;

mod quad;

pub use num_complex::Complex64 as C64;

pub use deformation::{Deformation, QexpError, QexpPoint, QuadConfig};
