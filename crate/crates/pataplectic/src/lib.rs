//! Multisymplectic (pataplectic) Hamiltonian field theory: exact exterior
//! calculus on `ΛⁿT*(𝒳×𝒴)`, the Legendre correspondence, brackets of
//! observable forms, and lattice integration of the De Donder–Weyl equations.

pub mod dynamics;
pub mod error;
pub mod expr;
pub mod exterior;
pub mod legendre;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod symsolve;

pub use error::{Error, Result};
