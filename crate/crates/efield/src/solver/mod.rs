//! Iterative solution of the block system and post-processing.
//!
//! Restarted GMRES with Jacobi (diagonal) left preconditioning drives either
//! the dense or the multipole-accelerated operators. Post-processing turns
//! the solved density into physical quantities: element-local mass solves
//! recover the Dirichlet and two-sided Neumann traces, quadrature sums give
//! per-conductor total charges, and direct kernel evaluation (with adaptive
//! subdivision near the surface) gives off-surface potentials and fields.

mod gmres;
mod post;

pub use gmres::{
    gmres, jacobi_preconditioner, solve_system, GmresConfig, JacobiPreconditioner, SolveReport,
};
pub use post::{
    post_process, recover_traces, split_unknowns, total_charge, FieldEvaluator, SolutionFields,
    Traces,
};

use nalgebra::Point3;
use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::mesh::MeshError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("configuration: {0}")]
    Configuration(String),
    #[error(
        "gmres breakdown after {iterations} iterations at relative residual {residual:.3e}"
    )]
    Breakdown { iterations: usize, residual: f64 },
    #[error("element {elem} has a singular mass block")]
    DegenerateElement { elem: usize },
    #[error("evaluation point {x:?} lies on the surface; use the recovered traces there")]
    OnSurface { x: Point3<f64> },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
