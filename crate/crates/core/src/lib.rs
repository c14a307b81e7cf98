//! Numerical toolkit for 1-periodic orbits in nontrivial free homotopy
//! classes, action windows and the relative capacity of annuli and tori.

pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod orbits;
pub mod profiles;
pub mod verify;

pub use error::{Error, Result};
