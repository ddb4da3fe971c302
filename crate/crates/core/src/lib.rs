//! DG–ROD: discontinuous Galerkin for advection–diffusion–reaction problems
//! on curved domains meshed by straight-sided triangles.
//!
//! The classical SIP + upwind scheme imposes Dirichlet data on the polygonal
//! boundary and loses accuracy beyond second order. The ROD variant instead
//! constrains each boundary element's polynomial to match the data at points
//! of the true curved boundary, which restores order N+1 in L².
//!
//! All numerics are generic over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`, which is what the study driver uses.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod dense;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod rodspace;
pub mod scalar;
pub mod study;

pub use analysis::{convergence_order, ConvergenceReport};
pub use assembly::{solve, Coefficients, Method};
pub use problems::{make_case, ManufacturedProblem};
pub use scalar::Real;
pub use study::{run_convergence_study, run_patch_test, RunConfig};

pub type CurvedDomain = geometry::CurvedDomain<f64>;
pub type Triangulation = mesh::Triangulation<f64>;
pub type NodalBasis = basis::NodalBasis<f64>;
pub type DGSystemSpec = assembly::DGSystemSpec<f64>;
pub type DgSolution = assembly::DgSolution<f64>;
pub type BoundaryConstraintSet = rodspace::BoundaryConstraintSet<f64>;
pub type SparseMatrix = linsolve::SparseMatrix<f64>;
