//! Covariant photon localization on spacetime hyperplanes.
//!
//! One-photon amplitudes live on the k lattice of a hyperplane grid
//! ([`kspace::HyperplaneGrid`]). From there the crate builds localized
//! (Newton-Wigner type) bases and projections ([`localization`]), flux
//! integrals and a Klein-Gordon reference ([`flux`]), and detector-array
//! simulation including boosted observers ([`detectors`]).

pub mod detectors;
pub mod error;
pub mod flux;
pub mod io;
pub mod kspace;
pub mod localization;
pub mod reduce;
pub mod spacetime;
pub mod states;
pub mod transform;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
