//! Exact solution of the affine inclusion problem by a direct linear solve.
//!
//! With `B` a basis of `V` and `C` a basis of `V⊥`, write `x = B a` and
//! `u = C c`. Splitting `u = M x + b` into its `V` and `V⊥` components gives
//!
//! ```text
//! [ BᵀMB   0 ] [a]   [-Bᵀb]
//! [ CᵀMB  -I ] [c] = [-Cᵀb]
//! ```
//!
//! which is nonsingular because `BᵀMB` inherits strong monotonicity from `M`.

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, DenseMatrix, OrthoSubspace, RealVector};
use crate::operators::AffineOperator;
use crate::problem::Solution;

pub const SUBSPACE_CHECK_TOLERANCE: f64 = 1e-10;
pub const EQUATION_CHECK_TOLERANCE: f64 = 1e-9;

pub fn solve_kkt_oracle(op: &AffineOperator, subspace: &OrthoSubspace) -> Result<Solution> {
    let n = op.dim();
    if subspace.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: subspace.ambient_dim(),
        });
    }
    let d = subspace.dim();
    let b_basis = subspace.basis();
    let complement = subspace.complement();
    let c_basis = complement.basis();
    let m = op.matrix();
    let offset = op.offset();

    let mb = m * b_basis;
    let mut system = DenseMatrix::zeros(n, n);
    system
        .view_mut((0, 0), (d, d))
        .copy_from(&(b_basis.transpose() * &mb));
    system
        .view_mut((d, 0), (n - d, d))
        .copy_from(&(c_basis.transpose() * &mb));
    for i in d..n {
        system[(i, i)] = -1.0;
    }
    let mut rhs = RealVector::zeros(n);
    rhs.rows_mut(0, d).copy_from(&(-(b_basis.tr_mul(offset))));
    rhs.rows_mut(d, n - d)
        .copy_from(&(-(c_basis.tr_mul(offset))));

    let coeffs = solve_linear(&system, &rhs)?;
    let x = b_basis * coeffs.rows(0, d);
    let u = c_basis * coeffs.rows(d, n - d);

    let checks = [
        (
            "x in V",
            subspace.complement_project(&x)?.norm(),
            SUBSPACE_CHECK_TOLERANCE,
        ),
        (
            "u in V-perp",
            subspace.project(&u)?.norm(),
            SUBSPACE_CHECK_TOLERANCE,
        ),
        (
            "u = Mx + b",
            (&u - op.eval(&x)?).norm(),
            EQUATION_CHECK_TOLERANCE * (1.0 + offset.norm()),
        ),
    ];
    for (check, residual, tolerance) in checks {
        if !(residual <= tolerance) {
            return Err(Error::OracleCheckFailed {
                check,
                residual,
                tolerance,
            });
        }
    }
    Ok(Solution { x, u })
}
