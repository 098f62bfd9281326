//! Dense real linear algebra used throughout the crate.
//!
//! Vectors and matrices are plain `nalgebra` dynamic types. On top of them this
//! module adds the pieces the solvers need with fixed, testable tolerances:
//!
//! - [`OrthoSubspace`]: a subspace stored as an orthonormal column basis,
//!   built by two-pass modified Gram-Schmidt.
//! - [`LuFactor`]: LU with partial pivoting and a hard pivot threshold, so a
//!   factorization can be reused across many right-hand sides.
//! - [`spectral_bounds`]: strong-monotonicity modulus and Lipschitz constant of
//!   a linear map.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type RealVector = DVector<f64>;
pub type DenseMatrix = DMatrix<f64>;

/// Relative tolerance for declaring a column dependent in [`orthonormalize`].
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Relative pivot threshold (against the max-abs entry) in [`LuFactor`].
pub const PIVOT_TOLERANCE: f64 = 1e-13;
/// Entrywise tolerance on `BᵀB = I` accepted by [`OrthoSubspace::from_basis`].
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

pub fn ensure_finite_vector(v: &RealVector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_matrix(m: &DenseMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_len(v: &RealVector, expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        })
    }
}

fn ensure_square(m: &DenseMatrix) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// A closed subspace `V ⊆ Rⁿ` held as an `n × d` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoSubspace {
    basis: DenseMatrix,
}

impl OrthoSubspace {
    /// Accepts a basis that is already orthonormal to [`ORTHONORMALITY_TOLERANCE`].
    pub fn from_basis(basis: DenseMatrix) -> Result<Self> {
        ensure_finite_matrix(&basis, "subspace basis")?;
        let d = basis.ncols();
        if d > basis.nrows() {
            return Err(Error::InvalidArgs(format!(
                "subspace dimension {d} exceeds ambient dimension {}",
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let off = (gram - DenseMatrix::identity(d, d)).amax();
        if off > ORTHONORMALITY_TOLERANCE {
            return Err(Error::InvalidArgs(format!(
                "basis is not orthonormal (max |BᵀB - I| = {off:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// `V = Rⁿ`.
    pub fn full(n: usize) -> Self {
        Self {
            basis: DenseMatrix::identity(n, n),
        }
    }

    /// `V = {0} ⊂ Rⁿ`.
    pub fn zero(n: usize) -> Self {
        Self {
            basis: DenseMatrix::zeros(n, 0),
        }
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = DenseMatrix::zeros(n, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidArgs(format!(
                    "axis {i} out of range for dimension {n}"
                )));
            }
            basis[(i, j)] = 1.0;
        }
        Self::from_basis(basis)
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `P_V v = B (Bᵀ v)`.
    pub fn project(&self, v: &RealVector) -> Result<RealVector> {
        ensure_len(v, self.ambient_dim())?;
        Ok(self.project_unchecked(v))
    }

    /// `P_{V⊥} v = v - P_V v`.
    pub fn complement_project(&self, v: &RealVector) -> Result<RealVector> {
        ensure_len(v, self.ambient_dim())?;
        Ok(v - self.project_unchecked(v))
    }

    pub(crate) fn project_unchecked(&self, v: &RealVector) -> RealVector {
        if self.dim() == 0 {
            return RealVector::zeros(v.len());
        }
        &self.basis * (self.basis.tr_mul(v))
    }

    pub(crate) fn complement_unchecked(&self, v: &RealVector) -> RealVector {
        v - self.project_unchecked(v)
    }

    /// `P_V` as an explicit `n × n` matrix.
    pub fn projector(&self) -> DenseMatrix {
        &self.basis * self.basis.transpose()
    }

    /// Orthonormal basis of `V⊥`.
    ///
    /// Greedily picks the coordinate vector with the largest residual against
    /// the current basis; the largest residual is always at least `1/√n`.
    pub fn complement(&self) -> OrthoSubspace {
        let n = self.ambient_dim();
        let mut cols: Vec<RealVector> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        let mut picked: Vec<RealVector> = Vec::with_capacity(n - self.dim());
        // ‖e_i - Q Qᵀ e_i‖² = 1 - Σ_j Q_ij²
        let mut row_sq: Vec<f64> = (0..n).map(|i| self.basis.row(i).norm_squared()).collect();
        for _ in self.dim()..n {
            let i = (0..n)
                .min_by(|&a, &b| row_sq[a].total_cmp(&row_sq[b]))
                .expect("ambient dimension is positive");
            let mut r = RealVector::zeros(n);
            r[i] = 1.0;
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dot(&r);
                    r.axpy(-c, q, 1.0);
                }
            }
            let q = &r / r.norm();
            for (s, qi) in row_sq.iter_mut().zip(q.iter()) {
                *s += qi * qi;
            }
            cols.push(q.clone());
            picked.push(q);
        }
        let basis = if picked.is_empty() {
            DenseMatrix::zeros(n, 0)
        } else {
            DenseMatrix::from_columns(&picked)
        };
        OrthoSubspace { basis }
    }
}

/// Orthonormalizes the columns of `columns` (two-pass modified Gram-Schmidt).
///
/// A column whose residual after orthogonalization falls below
/// [`RANK_TOLERANCE`] times the largest input column norm is rejected.
pub fn orthonormalize(columns: &DenseMatrix) -> Result<OrthoSubspace> {
    ensure_finite_matrix(columns, "columns")?;
    let n = columns.nrows();
    let m = columns.ncols();
    if m == 0 {
        return Ok(OrthoSubspace::zero(n));
    }
    let max_norm = columns
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let tolerance = RANK_TOLERANCE * max_norm;
    let mut q: Vec<RealVector> = Vec::with_capacity(m);
    for (j, col) in columns.column_iter().enumerate() {
        let mut r = col.into_owned();
        // second pass restores orthogonality lost to cancellation
        for _ in 0..2 {
            for qi in &q {
                let c = qi.dot(&r);
                r.axpy(-c, qi, 1.0);
            }
        }
        let nr = r.norm();
        if !(nr > tolerance) {
            return Err(Error::RankDeficient {
                column: j,
                residual: nr,
                tolerance,
            });
        }
        q.push(r / nr);
    }
    Ok(OrthoSubspace {
        basis: DenseMatrix::from_columns(&q),
    })
}

/// LU factorization with partial pivoting, `P A = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = ensure_square(a)?;
        ensure_finite_matrix(a, "matrix")?;
        let threshold = PIVOT_TOLERANCE * a.amax();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].abs());
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            if !(best > threshold) {
                return Err(Error::SingularMatrix {
                    step: k,
                    pivot: best,
                    threshold,
                });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, rhs: &RealVector) -> Result<RealVector> {
        let n = self.dim();
        ensure_len(rhs, n)?;
        let mut x = RealVector::from_iterator(n, self.perm.iter().map(|&p| rhs[p]));
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Solves `A x = rhs` by LU with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, rhs: &RealVector) -> Result<RealVector> {
    let n = ensure_square(a)?;
    ensure_len(rhs, n)?;
    LuFactor::new(a)?.solve(rhs)
}

/// `(η, L)` with `η = λ_min((M + Mᵀ)/2)` and `L = σ_max(M)`, without a sign check.
pub fn spectral_moduli(m: &DenseMatrix) -> Result<(f64, f64)> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Err(Error::InvalidArgs("empty matrix has no spectrum".into()));
    }
    ensure_finite_matrix(m, "matrix")?;
    let sym = (m + m.transpose()) * 0.5;
    let eta = SymmetricEigen::new(sym).eigenvalues.min();
    let lipschitz = m.clone().singular_values().max();
    Ok((eta, lipschitz))
}

/// Certified moduli of the linear map `z ↦ M z`; fails when `η ≤ 0`.
///
/// The error still carries both values for callers that only need them as numbers.
pub fn spectral_bounds(m: &DenseMatrix) -> Result<(f64, f64)> {
    let (eta, lipschitz) = spectral_moduli(m)?;
    if eta <= 0.0 {
        return Err(Error::NotStronglyMonotone { eta, lipschitz });
    }
    Ok((eta, lipschitz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec(xs: &[f64]) -> RealVector {
        RealVector::from_row_slice(xs)
    }

    #[test]
    fn orthonormalize_keeps_unit_column() {
        let v = orthonormalize(&DenseMatrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_eq!(v.basis().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn orthonormalize_normalizes() {
        let v = orthonormalize(&DenseMatrix::from_row_slice(2, 1, &[3.0, 4.0])).unwrap();
        assert_relative_eq!(v.basis()[(0, 0)], 0.6, epsilon = 1e-15);
        assert_relative_eq!(v.basis()[(1, 0)], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn orthonormalize_rejects_duplicate_direction() {
        let cols = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1e-15]);
        assert!(matches!(
            orthonormalize(&cols),
            Err(Error::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn projections_on_coordinate_axis() {
        let v = OrthoSubspace::coordinate(2, &[0]).unwrap();
        let x = vec(&[3.0, 4.0]);
        assert_eq!(v.project(&x).unwrap(), vec(&[3.0, 0.0]));
        assert_eq!(v.complement_project(&x).unwrap(), vec(&[0.0, 4.0]));
    }

    #[test]
    fn full_and_zero_subspaces() {
        let x = vec(&[1.5, -2.0]);
        assert_eq!(OrthoSubspace::full(2).project(&x).unwrap(), x);
        assert_eq!(
            OrthoSubspace::zero(2).project(&x).unwrap(),
            RealVector::zeros(2)
        );
        assert_eq!(OrthoSubspace::zero(2).complement_project(&x).unwrap(), x);
    }

    #[test]
    fn project_rejects_wrong_length() {
        let v = OrthoSubspace::full(2);
        assert!(matches!(
            v.project(&vec(&[1.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn complement_spans_orthogonal_space() {
        let v = orthonormalize(&DenseMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0])).unwrap();
        let c = v.complement();
        assert_eq!(c.dim(), 2);
        let cross = v.basis().transpose() * c.basis();
        assert!(cross.amax() < 1e-14);
        let gram = c.basis().transpose() * c.basis();
        assert!((gram - DenseMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn solve_diagonal() {
        let a = DenseMatrix::identity(2, 2) * 2.0;
        assert_eq!(
            solve_linear(&a, &vec(&[2.0, 4.0])).unwrap(),
            vec(&[1.0, 2.0])
        );
    }

    #[test]
    fn solve_upper_triangular() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert_eq!(
            solve_linear(&a, &vec(&[3.0, 1.0])).unwrap(),
            vec(&[2.0, 1.0])
        );
    }

    #[test]
    fn solve_singular() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            solve_linear(&a, &vec(&[1.0, 2.0])),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn solve_rejects_non_square() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            solve_linear(&a, &vec(&[1.0, 2.0])),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn spectral_bounds_diagonal() {
        let m = DenseMatrix::from_diagonal(&vec(&[2.0, 5.0]));
        let (eta, l) = spectral_bounds(&m).unwrap();
        assert_relative_eq!(eta, 2.0, max_relative = 1e-12);
        assert_relative_eq!(l, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_bounds_skew_is_not_strongly_monotone() {
        let m = DenseMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(
            spectral_bounds(&m),
            Err(Error::NotStronglyMonotone { .. })
        ));
    }

    #[test]
    fn spectral_bounds_jordan_block() {
        // sym part [[2, .5], [.5, 2]] has eigenvalues 1.5, 2.5;
        // MᵀM = [[4, 2], [2, 5]] has largest eigenvalue (9 + √17)/2.
        let m = DenseMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let (eta, l) = spectral_bounds(&m).unwrap();
        assert_relative_eq!(eta, 1.5, max_relative = 1e-8);
        assert_relative_eq!(l, ((9.0 + 17f64.sqrt()) / 2.0).sqrt(), max_relative = 1e-8);
        assert_relative_eq!(l, 2.5616, max_relative = 1e-4);
    }
}
