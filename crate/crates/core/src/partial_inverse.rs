//! Spingarn's partial inverse `T_V` of an operator with respect to a subspace.
//!
//! The graph of `T_V` is the set of pairs `(z, v)` with
//! `P_V v + P_{V⊥} z ∈ T(P_V z + P_{V⊥} v)`.
//!
//! For affine `T(z) = M z + b` and writing `P = P_V`, `Q = I - P`, membership
//! reads `P v + Q z = M (P z + Q v) + b`, i.e.
//!
//! ```text
//! (P - M Q) v = (M P - Q) z + b.
//! ```
//!
//! `P - M Q` is invertible whenever `M` is strongly monotone: if
//! `(P - M Q) v = 0` then `P v = M Q v`, and pairing with `Q v` gives
//! `0 = ⟨Q v, P v⟩ = ⟨Q v, M Q v⟩ ≥ η‖Q v‖²`, so `Q v = 0` and then `P v = 0`.
//! This closed form is the independent reference that the SPDG iteration is
//! checked against.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactor, OrthoSubspace, RealVector};
use crate::operators::{AffineOperator, Operator};
use crate::sampling;

/// Slack for sampled strong-monotonicity checks of `T_V`.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

/// `μ = η / (1 + L²)`, the strong-monotonicity modulus of `T_V`.
pub fn modulus(eta: f64, lipschitz: f64) -> Result<f64> {
    if !(eta > 0.0) || !(lipschitz >= eta) || !lipschitz.is_finite() {
        return Err(Error::InvalidModuli { eta, lipschitz });
    }
    Ok(eta / (1.0 + lipschitz * lipschitz))
}

#[derive(Debug, Clone)]
struct AffineForm {
    projector: DenseMatrix,
    complement: DenseMatrix,
    /// `P - M Q`
    value_lu: LuFactor,
    value_matrix: DenseMatrix,
    /// `M P - Q`
    point_matrix: DenseMatrix,
    /// `(M P - Q) + (P - M Q)`, the λ = 1 resolvent system
    unit_resolvent_lu: LuFactor,
}

/// `T_V` for a given operator and subspace.
#[derive(Debug, Clone)]
pub struct PartialInverseOperator {
    op: Operator,
    subspace: OrthoSubspace,
    mu: f64,
    affine: Option<AffineForm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub mu: f64,
    /// Smallest observed `⟨z - z', v - v'⟩ / ‖z - z'‖²`.
    pub worst_ratio: f64,
}

impl PartialInverseOperator {
    pub fn new(op: Operator, subspace: OrthoSubspace) -> Result<Self> {
        if op.dim() != subspace.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: subspace.ambient_dim(),
            });
        }
        let mu = modulus(op.eta(), op.lipschitz())?;
        let affine = match &op {
            Operator::Affine(a) => Some(Self::affine_form(a, &subspace)?),
            Operator::BlackBox(_) => None,
        };
        Ok(Self {
            op,
            subspace,
            mu,
            affine,
        })
    }

    fn affine_form(op: &AffineOperator, subspace: &OrthoSubspace) -> Result<AffineForm> {
        let n = op.dim();
        let m = op.matrix();
        let projector = subspace.projector();
        let complement = DenseMatrix::identity(n, n) - &projector;
        let value_matrix = &projector - m * &complement;
        let point_matrix = m * &projector - &complement;
        let value_lu = LuFactor::new(&value_matrix)?;
        let unit_resolvent_lu = LuFactor::new(&(&point_matrix + &value_matrix))?;
        Ok(AffineForm {
            projector,
            complement,
            value_lu,
            value_matrix,
            point_matrix,
            unit_resolvent_lu,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn subspace(&self) -> &OrthoSubspace {
        &self.subspace
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    fn form(&self) -> Result<(&AffineForm, &AffineOperator)> {
        match (&self.affine, self.op.as_affine()) {
            (Some(f), Some(a)) => Ok((f, a)),
            _ => Err(Error::NotAffine),
        }
    }

    fn check_len(&self, v: &RealVector) -> Result<()> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            })
        }
    }

    /// The unique `v` with `(z, v)` in the graph of `T_V` (affine `T` only).
    pub fn eval_affine(&self, z: &RealVector) -> Result<RealVector> {
        self.check_len(z)?;
        let (form, op) = self.form()?;
        form.value_lu.solve(&(&form.point_matrix * z + op.offset()))
    }

    /// `‖P_V v + P_{V⊥} z - T(P_V z + P_{V⊥} v)‖`, zero exactly on the graph.
    pub fn membership_residual(&self, z: &RealVector, v: &RealVector) -> Result<f64> {
        self.check_len(z)?;
        self.check_len(v)?;
        let s = &self.subspace;
        let image = s.project_unchecked(v) + s.complement_unchecked(z);
        let point = s.project_unchecked(z) + s.complement_unchecked(v);
        Ok((image - self.op.eval(&point)?).norm())
    }

    /// `(λ T_V + I)⁻¹ w` by a direct solve of the affine membership equation.
    ///
    /// With `v = (w - z) / λ` the graph condition becomes
    /// `[λ (M P - Q) + (P - M Q)] z = (P - M Q) w - λ b`.
    pub fn resolvent_direct(&self, lambda: f64, w: &RealVector) -> Result<RealVector> {
        self.check_len(w)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::NonpositiveGamma(lambda));
        }
        let (form, op) = self.form()?;
        let rhs = &form.value_matrix * w - op.offset() * lambda;
        if lambda == 1.0 {
            form.unit_resolvent_lu.solve(&rhs)
        } else {
            let system = &form.point_matrix * lambda + &form.value_matrix;
            LuFactor::new(&system)?.solve(&rhs)
        }
    }

    /// `(T_V + I)⁻¹ w` through one decomposition step on the graph of `T`:
    /// `r = (T + I)⁻¹ w`, then `P_V r + P_{V⊥}(w - r)`.
    pub fn resolvent_via_graph_step(&self, w: &RealVector) -> Result<RealVector> {
        self.check_len(w)?;
        let r = self.op.resolvent(1.0, w)?;
        let s = &self.subspace;
        Ok(s.project_unchecked(&r) + s.complement_unchecked(&(w - &r)))
    }

    /// `(T_V + I)⁻¹ w`: direct solve for affine operators, graph step otherwise.
    pub fn resolvent_pi(&self, w: &RealVector) -> Result<RealVector> {
        if self.affine.is_some() {
            self.resolvent_direct(1.0, w)
        } else {
            self.resolvent_via_graph_step(w)
        }
    }

    /// `T_V` itself as an affine operator, `v = (P - M Q)⁻¹ (M P - Q) z + (P - M Q)⁻¹ b`.
    pub fn to_affine(&self) -> Result<AffineOperator> {
        let (form, op) = self.form()?;
        let n = self.dim();
        let mut matrix = DenseMatrix::zeros(n, n);
        for (j, col) in form.point_matrix.column_iter().enumerate() {
            matrix.set_column(j, &form.value_lu.solve(&col.into_owned())?);
        }
        let offset = form.value_lu.solve(op.offset())?;
        AffineOperator::new(matrix, offset)
    }

    pub fn projector(&self) -> Option<(&DenseMatrix, &DenseMatrix)> {
        self.affine.as_ref().map(|f| (&f.projector, &f.complement))
    }

    /// Samples pairs and checks `⟨z - z', v - v'⟩ ≥ μ‖z - z'‖² - slack`.
    pub fn check_strong_monotonicity(
        &self,
        n_samples: usize,
        seed: u64,
    ) -> Result<MonotonicityReport> {
        if n_samples == 0 {
            return Err(Error::InvalidArgs("n_samples must be at least 1".into()));
        }
        let mut rng = sampling::rng(seed);
        let mut worst_ratio = f64::INFINITY;
        for sample in 0..n_samples {
            let z = sampling::gaussian_vector(&mut rng, self.dim());
            let zp = sampling::gaussian_vector(&mut rng, self.dim());
            let dz = &z - &zp;
            let dv = self.eval_affine(&z)? - self.eval_affine(&zp)?;
            let inner = dz.dot(&dv);
            let dz2 = dz.norm_squared();
            let ratio = inner / dz2;
            worst_ratio = worst_ratio.min(ratio);
            if inner < self.mu * dz2 - MONOTONICITY_SLACK {
                return Err(Error::PartialInverseNotMonotone {
                    sample,
                    ratio,
                    mu: self.mu,
                    z: z.as_slice().to_vec(),
                    z_prime: zp.as_slice().to_vec(),
                });
            }
        }
        Ok(MonotonicityReport {
            samples: n_samples,
            mu: self.mu,
            worst_ratio,
        })
    }
}
