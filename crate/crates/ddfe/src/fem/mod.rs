//! Triangulated 2D boundary-value problems: meshes and loads, the two
//! constraint projections, the classical Newton solver, and discrete
//! diagnostics.

pub mod diagnostics;
pub mod mesh;
pub mod newton;
pub mod project;

pub use diagnostics::{discrete_diagnostics, DiagnosticsRecord, ElementFields};
pub use mesh::{
    AffineMap, BcFile, BodyForceSpec, Mesh, MeshFile, MeshProblem, SquareBoundary, TractionSpec,
};
pub use newton::{potential_energy, solve_classical, ClassicalSolution};
pub use project::{
    equilibrium_residual, project_compatible, project_equilibrium, residual_norm,
};
