//! Lattice integration of the Hamilton equations and on-solution checks.

pub mod checks;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod scalar;
pub mod string;
pub mod trajectory;

pub use lattice::{Axis, Boundary, LatticeSpec};
pub use scalar::{solve_dw_scalar, solve_el, ElStencil};
pub use string::solve_dw_string;
pub use trajectory::{InitData, InitJson, Trajectory};

use crate::error::{Error, Result};
use crate::models::{Model, SigmaKind};

/// De Donder–Weyl evolution, dispatched on the model family.
pub fn solve_dw(model: &Model, lattice: &LatticeSpec, init: &InitData) -> Result<Trajectory> {
    match model.sigma.as_ref().map(|s| s.kind()) {
        Some(SigmaKind::Scalar) => solve_dw_scalar(model, lattice, init),
        Some(SigmaKind::String) => solve_dw_string(model, lattice, init),
        None => Err(Error::Model(format!(
            "model '{}' is not a sigma model; lattice evolution needs metric data",
            model.name
        ))),
    }
}
