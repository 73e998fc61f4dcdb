//! Effective stability times near resonances.
//!
//! The pipeline: build a model Hamiltonian ([`models`]), normalize it with
//! Lie series ([`normalize`]), pick Diophantine frequencies converging to a
//! resonance ([`diophantine`]), bound the remainder and optimize the
//! parameters of the non-resonant stability estimate ([`estimate`]), and
//! drive whole scans ([`scan`]).

pub mod diophantine;
pub mod error;
pub mod estimate;
pub mod models;
pub mod normalize;
pub mod pseries;
pub mod scan;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
