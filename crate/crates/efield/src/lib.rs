//! Boundary-element electrostatics on curved, possibly non-conforming surface meshes.
//!
//! The library solves exterior/interior electrostatic transmission problems with
//! an indirect single-layer ansatz `u = S sigma`: conductor surfaces carry
//! Dirichlet data, dielectric interfaces carry a flux-jump condition, and
//! floating conductors contribute one unknown potential plus one total-charge
//! constraint each. Everything is discretized with an element-local
//! (discontinuous) Galerkin density space so that meshes of neighbouring
//! patches never have to match along their common boundary.
//!
//! Module map:
//! * [`geometry`]  - exact surface patches (B-spline/NURBS and analytic) and
//!   closest-point projection onto them,
//! * [`mesh`]      - curved Lagrange surface meshes, the domain/region skeleton,
//!   interface detection between independently meshed patches, order elevation,
//! * [`quadrature`]- Gauss rules, pair classification, non-conforming pair
//!   subdivision and the singular product rules for touching element pairs,
//! * [`assembly`]  - Galerkin assembly of the single layer / adjoint double
//!   layer / mass blocks and of the saddle block system,
//! * [`fmm`]       - a multipole accelerated matrix-free version of the same
//!   operators,
//! * [`solver`]    - restarted GMRES, Jacobi preconditioning, trace recovery
//!   and field evaluation,
//! * [`app`]       - JSON configuration, mesh I/O, run orchestration and
//!   VTK/CSV/JSON exports.

pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod assembly;
pub mod fmm;
pub mod solver;
pub mod app;
pub mod fixtures;

/// Vacuum permittivity in F/m. Test problems usually override this with 1.
pub const EPSILON_0_SI: f64 = 8.854_187_812_8e-12;

pub use geometry::GeometryError;
pub use mesh::MeshError;
pub use quadrature::QuadratureError;
pub use assembly::AssemblyError;
pub use fmm::FmmError;
pub use solver::SolverError;
pub use app::AppError;
