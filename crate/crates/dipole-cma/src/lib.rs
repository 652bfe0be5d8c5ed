//! Characteristic-mode analysis of a vertical thin-wire dipole above a lossy
//! dielectric half-space.
//!
//! The crate builds the Galerkin method-of-moments system of the Pocklington
//! equation with a complex-image half-space Green's function, solves four
//! characteristic-mode formulations of that system, expands driven currents
//! in modes, predicts ground-coupled modes from isolated ones through
//! interaction powers, and evaluates near/far fields plus the error and
//! efficiency figures used to compare everything.
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability and `src/main.rs` for the scenario-file front end.

pub mod constants;
pub mod coupling;
pub mod error;
pub mod fields;
pub mod greens;
pub mod metrics;
pub mod modal;
pub mod mom;
pub mod quadrature;
pub mod runner;
pub mod wire;

pub use error::{Error, Result};
