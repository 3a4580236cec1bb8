//! Distributed Nash-equilibrium seeking for aggregative games.
//!
//! Each player's compact convex feasible set is replaced by an inscribed
//! polyhedron, so the projection step of the projected-gradient dynamics
//! becomes a small quadratic program. The crate provides:
//!
//! - [`geometry`]: convex bodies, inscribed polyhedron construction,
//!   Hausdorff estimates and the perturbation bound `delta_bound`.
//! - [`polyproj`]: Euclidean projection onto `{y : By <= b}`.
//! - [`game`]: aggregative games and the two builtin benchmark models.
//! - [`network`]: communication digraphs, Laplacian spectra and the
//!   step-size gain gate.
//! - [`dynamics`]: the consensus-based projected dynamics, in polyhedral
//!   and exact-projection modes.
//! - [`metrics`]: epsilon measurement, perturbation magnitudes, rate fits.
//! - [`cli`]: the `aggsolve` experiment harness.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod par;
pub mod polyproj;

pub use error::{Error, Result};
