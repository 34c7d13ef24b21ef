//! Conformally invariant measures on planar Delaunay triangulations.
//!
//! Given a configuration of points in the complex plane with three fixed
//! vertices, this crate builds its Delaunay triangulation together with the
//! circle-pattern angles `theta(e)`, and evaluates the induced measure
//! density three independent ways:
//!
//! * the Jacobian determinant of the angle coordinates with respect to the
//!   point positions, over a basis of independent edges;
//! * the determinant of the Kahler form `D = d d-bar A`, where the
//!   prepotential `A` is minus the total hyperbolic volume of the ideal
//!   tetrahedra over the faces;
//! * a signed sum over triangle-rooted spanning 3-trees.
//!
//! The exact integer and rational identities tying these routes together
//! (incidence relations, edge-basis determinants, the Pfaffian normalization
//! of the vertex 2-forms) are implemented alongside and used as
//! verification suites, together with a Metropolis sampler of the point
//! process.

pub mod chern;
pub mod combinatorics;
pub mod error;
pub mod fixtures;
pub mod fpgauge;
pub mod geometry;
pub mod hyperbolic;
pub mod linalg;
pub mod measure;
pub mod mesh;
pub mod operators;
pub mod sampler;

pub use error::{Error, Result};
pub use geometry::FaceGeom;
pub use mesh::{Convention, PointConfig, Triangulation};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
