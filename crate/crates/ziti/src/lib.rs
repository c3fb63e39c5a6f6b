//! Mollifier-basis ("delta-ziti") quadrature and PDE solvers on the unit disk.
//!
//! * [`bump_basis`]: orthonormalized bump basis on an interval, collocation
//!   roots and quadrature weights.
//! * [`disk_mesh`]: chord-sweep and polar discretizations of the disk.
//! * [`quadrature`]: interval and disk rules, composite baselines, integrand catalog.
//! * [`pde_poisson`]: discrete Laplacians and the Dirichlet Poisson problem.
//! * [`pde_heat`]: explicit heat equation stepping.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod adaptive;
pub mod bump_basis;
pub mod disk_mesh;
mod error;
pub mod linalg;
pub mod pde_heat;
pub mod pde_poisson;
pub mod quadrature;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Basis1D = bump_basis::Basis1D<f64>;
pub type BumpProfile = bump_basis::BumpProfile<f64>;
pub type CartesianDiskMesh = disk_mesh::CartesianDiskMesh<f64>;
pub type PolarMesh = disk_mesh::PolarMesh<f64>;
pub type GridOperator = pde_poisson::GridOperator<f64>;
pub type ScalarField2D = pde_poisson::ScalarField2D<f64>;
pub type SolveReport = pde_poisson::SolveReport<f64>;
pub type BlockTridiagonalSystem = linalg::BlockTridiagonalSystem<f64>;
pub type HeatRun = pde_heat::HeatRun<f64>;
pub type Integrand = quadrature::Integrand<f64>;
