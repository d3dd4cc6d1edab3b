//! Boundary-integral solvers for Laplace and Helmholtz boundary value problems.
//!
//! The crate implements two trace discretizations over the same collocation
//! boundary-integral machinery:
//!
//! * a random-feature boundary network (`features` + `assembly` + `solver`),
//!   where unknown boundary traces are expanded in a fixed random basis and
//!   the coefficients solve a least-squares collocation system, and
//! * a piecewise-constant boundary element baseline (`bem`).
//!
//! Supported problems: interior mixed Dirichlet/Neumann problems in 2D,
//! exterior Dirichlet problems in 2D, and 3D sound-hard acoustic scattering
//! from closed triangulated surfaces via a Burton-Miller formulation.
//! Analytic reference fields for all of these live in `reference`.

pub mod assembly;
pub mod bem;
pub mod features;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod specfun;

mod error;

pub use error::{Error, Result};

/// Complex scalar used for kernels, traces and solution fields.
pub type Cplx = num_complex::Complex64;

pub use assembly::{BiSystem, BoundaryBasis, FeatureTrace, IndicatorBasis, ProblemKind};
pub use bem::PanelDensities;
pub use features::{Activation, FeatureBasis, SamplerConfig};
pub use geometry::{BcTag, Boundary2d, Orientation, Panel2d, Shape2d, TriMesh};
pub use kernels::KernelKind;
pub use reference::{MieSphere, Reference2d};
pub use solver::{FieldSolution, SolveReport};
pub use quadrature::{GaussRule, TriangleRule};
