//! First Dirichlet (p,q)-eigenpairs of the horizontal p-Laplacian on boxes in
//! Carnot groups (Euclidean plane and first Heisenberg group), discretized by
//! forward differences along the horizontal vector fields.

pub mod diagnostics;
pub mod eigensolver;
pub mod error;
pub mod exec;
pub mod group;
pub mod inner_solver;
pub mod mesh;
pub mod operators;
pub mod oracle;

pub use eigensolver::{inverse_iteration, rayleigh_minimize, rayleigh_quotient, EigenResult, Method, SolverConfig};
pub use error::{Error, Result};
pub use exec::Exec;
pub use group::{check_exponents, critical_exponent, GroupDescriptor, GroupKind};
pub use inner_solver::{InnerConfig, InnerMethod};
pub use mesh::{build_grid, horizontal_gradient, lq_norm, p_energy, Field, Grid, HField};
pub use operators::{apply_a, apply_b, pairing, residual, DualField};
