use thiserror::Error;

/// Errors produced by mesh construction, geometry and measure evaluation.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate points: vertices {0} and {1} coincide within tolerance")]
    DuplicatePoint(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("collinear face: |area| below tolerance")]
    CollinearFace,
    #[error("Mobius map has a pole at vertex {0}")]
    PoleHit(usize),
    #[error("Bloch-Wigner function is singular at z = {0}")]
    SingularArgument(num_complex::Complex64),
    #[error("coinciding points: minimum pairwise distance {min_dist:e} below tolerance {tol:e}")]
    CoincidingPoints { min_dist: f64, tol: f64 },
    #[error("finite-difference stencil crosses a Delaunay flip (h = {0:e})")]
    FlipInsideStencil(f64),
    #[error("exhaustive enumeration guarded at N <= {limit}, got N = {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("E submatrix is singular: edge set is not a basis")]
    SingularSubmatrix,
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("triangulation combinatorics changed during the scan")]
    CombinatoricsChanged,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
