//! Galerkin assembly of the boundary operators and the mixed block system.
//!
//! The density lives in a discontinuous element-wise polynomial space. The
//! single-layer operator V and the adjoint double-layer operator K' are
//! integrated pairwise with singularity-aware quadrature; element mass
//! matrices, basis integrals, per-conductor vectors, and the floating-charge
//! constraints complete the system
//!
//!   D rows:  K sigma - lambda M sigma = 0
//!   E rows:  V sigma = g h
//!   F rows:  V sigma - alpha h = 0
//!   charge:  f . sigma = -Q / eps0
//!
//! with unknowns ordered (sigma_D, sigma_E, sigma_F, alpha).

mod galerkin;
mod kernel;
mod space;
mod system;

pub use galerkin::{make_assembler, Assembler, AssemblyConfig, ElemCache};
pub use kernel::{eval_kernel, KernelKind};
pub use space::{DensitySpace, MAX_QUAD_DENSITY_ORDER, MAX_TRI_DENSITY_ORDER};
pub use system::{
    assemble_vectors, build_block_system, BlockDiagonal, BlockSystem, ChargeRow, ChargeTerm,
    ConductorVectors, DenseOperator, OperatorApply, SystemLayout,
};

// The transmission parameter is defined next to the skeleton that fixes its
// side convention; re-exported here because it belongs to the assembly math.
pub use crate::mesh::lambda_param;

use nalgebra::Point3;
use thiserror::Error;

use crate::mesh::MeshError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("kernel evaluated at coincident points near {x:?}")]
    KernelSingularity { x: Point3<f64> },
    #[error("configuration: {0}")]
    Configuration(String),
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
