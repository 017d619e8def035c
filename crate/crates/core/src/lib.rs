//! Space-time multi-patch discontinuous Galerkin isogeometric analysis (dG-IgA)
//! for the heat equation on deforming domains.
//!
//! The space-time cylinder is decomposed into tensor-product B-spline patches,
//! time is treated as an extra coordinate, and the patches are coupled with a
//! time-upwind discontinuous Galerkin formulation. The crate provides:
//!
//! - [`bspline`]: knot vectors, Cox–de Boor evaluation with derivatives,
//!   tensor-product bases, uniform refinement, Greville abscissae
//! - [`geometry`]: B-spline geometry maps, Jacobians, physical derivatives,
//!   multi-patch topology with facet classification
//! - [`quadrature`]: Gauss–Legendre rules on elements and facets
//! - [`assembly`]: the stabilized space-time bilinear/linear forms with
//!   interface upwind, flux and penalty terms, and strong boundary data
//! - [`solve`](mod@solve): sparse direct LU solve of the non-symmetric system
//! - [`analysis`]: dG-norm and L2 errors, convergence rates
//! - [`cases`]: built-in manufactured problems on fixed and moving domains
//! - [`study`]: convergence-study driver with CSV/JSON output

pub mod analysis;
pub mod assembly;
pub mod bspline;
pub mod cases;
pub mod geometry;
mod linalg;
pub mod par;
pub mod quadrature;
pub mod solve;
pub mod study;

pub use analysis::{convergence_rates, dg_error, dg_norm, l2_error, ErrorReport};
pub use assembly::{assemble_system, default_penalties, DGParameters, SparseSystem};
pub use bspline::{KnotVector, TensorBasis};
pub use cases::ManufacturedProblem;
pub use geometry::{build_multipatch, GeometryMap, MultiPatchDomain, Patch};
pub use solve::{solve, SolveReport};
pub use study::{run_study, StudyConfig};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation point outside the parameter domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid argument (degree, derivative order, rule size, ...).
    #[error("argument error: {0}")]
    Argument(String),
    /// Degenerate or inverted geometry.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A patch face that matches no neighbor and no boundary class.
    #[error("topology error: {0}")]
    Topology(String),
    /// Patch faces that overlap only partially or are otherwise unsupported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// Boundary interpolation failure.
    #[error("constraint error: {0}")]
    Constraint(String),
    /// Singular or failed sparse factorization.
    #[error("solver error: {0}")]
    Solver(String),
    /// Invalid study configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
