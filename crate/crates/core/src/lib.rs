//! Adaptive robust linear optimization with right-hand-side uncertainty.
//!
//! The pipeline is: describe a [`model::RobustLP`] with a set per constraint,
//! pick which policy coefficients may adapt ([`model::Mask`]), reformulate
//! into a deterministic program ([`rc::reformulate`]), solve it
//! ([`solve::solve`]), then stress the resulting [`model::AffinePolicy`] with
//! samples drawn beyond the modeled sets ([`sim::simulate`]). Set sizes can be
//! calibrated from target violation probabilities with [`guarantees`].

pub mod cli;
pub mod error;
pub mod guarantees;
pub mod io;
pub mod model;
pub mod program;
pub mod rc;
pub mod sim;
pub mod solve;
pub mod toy;
pub mod usets;

pub use error::{Error, Result};
pub use model::{AffinePolicy, Hardness, Mask, RobustConstraint, RobustLP};
pub use program::DetProgram;
pub use solve::{Solution, SolverOptions, Status};
pub use usets::{BoundedSupport, UncertaintySet};
