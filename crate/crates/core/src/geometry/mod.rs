//! Convex feasible sets and their inscribed polyhedral approximations.

mod body;
mod bound;
mod hausdorff;
mod hull;
mod inscribe;
mod polyhedron;

pub use body::{BodyKind, ConvexBody};
pub use bound::{curvature_nu, delta_bound, projection_gap_bound};
pub use hausdorff::{hausdorff_estimate, hausdorff_estimate_with, HausdorffEstimate, HausdorffOptions};
pub use hull::Hull3;
pub use inscribe::{
    default_seed, inscribe_cube, inscribe_greedy, inscribe_greedy_traced, inscribe_regular, GreedyTrace,
};
pub use polyhedron::Polyhedron;

use crate::error::Result;

/// A closed convex set that supports Euclidean projection.
pub trait ConvexSet: Send + Sync {
    fn dim(&self) -> usize;

    fn project(&self, z: &[f64]) -> Result<Vec<f64>>;

    fn contains(&self, z: &[f64], tol: f64) -> bool;
}

impl ConvexSet for ConvexBody {
    fn dim(&self) -> usize {
        ConvexBody::dim(self)
    }

    fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.project_exact(z)
    }

    fn contains(&self, z: &[f64], tol: f64) -> bool {
        ConvexBody::contains(self, z, tol)
    }
}

impl ConvexSet for Polyhedron {
    fn dim(&self) -> usize {
        Polyhedron::dim(self)
    }

    fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        crate::polyproj::project_polyhedron(self, z, crate::polyproj::DEFAULT_TOL).map(|s| s.point)
    }

    fn contains(&self, z: &[f64], tol: f64) -> bool {
        Polyhedron::contains(self, z, tol)
    }
}
