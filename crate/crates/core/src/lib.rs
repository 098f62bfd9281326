//! Partial-inverse proximal point methods for finding `x ∈ V`, `u ∈ V⊥` with
//! `u = T(x)`, where `T` is strongly monotone and Lipschitz, together with
//! the machinery to check their linear convergence rates numerically.

// NaN must fail every validity check, hence `!(x > 0.0)` style guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod partial_inverse;
pub mod problem;
pub mod rates;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Modulus, Result};
pub use linalg::{
    orthonormalize, solve_linear, spectral_bounds, DenseMatrix, LuFactor, OrthoSubspace, RealVector,
};
pub use operators::{AffineOperator, BlackBoxOperator, Operator};
pub use partial_inverse::PartialInverseOperator;
pub use problem::{InclusionProblem, Solution};
pub use solvers::{pp_solve, spdg_solve, spdg_solve_from, SolverTrace, SpdgConfig, TraceMode};
