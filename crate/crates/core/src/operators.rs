//! Strongly monotone, Lipschitz operators and their resolvents.
//!
//! Two kinds are supported. [`AffineOperator`] is `T(z) = M z + b` whose
//! resolvent is a direct linear solve. [`BlackBoxOperator`] wraps a
//! user-supplied map together with a user-supplied resolvent. Both carry a
//! strong-monotonicity modulus `η` and a Lipschitz constant `L` which the rate
//! formulas consume as constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Modulus, Result};
use crate::linalg::{
    ensure_finite_matrix, ensure_finite_vector, spectral_bounds, spectral_moduli, DenseMatrix,
    LuFactor, RealVector,
};
use crate::sampling;

/// Relative tolerance between stored moduli and the spectral ones.
pub const MODULI_TOLERANCE: f64 = 1e-8;
/// Absolute slack allowed when checking sampled pairs in [`Operator::certify_moduli`].
pub const CERTIFY_SLACK: f64 = 1e-8;

pub type Evaluator = Arc<dyn Fn(&RealVector) -> RealVector + Send + Sync>;
pub type ResolventEvaluator = Arc<dyn Fn(f64, &RealVector) -> RealVector + Send + Sync>;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveGamma(gamma))
    }
}

fn check_moduli(eta: f64, lipschitz: f64) -> Result<()> {
    if eta > 0.0 && lipschitz >= eta && lipschitz.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModuli { eta, lipschitz })
    }
}

fn check_len(v: &RealVector, n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        })
    }
}

/// `T(z) = M z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator {
    matrix: DenseMatrix,
    offset: RealVector,
    eta: f64,
    lipschitz: f64,
}

impl AffineOperator {
    /// Builds the operator with moduli computed from the spectrum of `M`.
    pub fn new(matrix: DenseMatrix, offset: RealVector) -> Result<Self> {
        Self::check_shapes(&matrix, &offset)?;
        let (eta, lipschitz) = spectral_bounds(&matrix)?;
        Ok(Self {
            matrix,
            offset,
            eta,
            lipschitz,
        })
    }

    /// Builds the operator with stored moduli, verified against the spectrum to
    /// [`MODULI_TOLERANCE`].
    pub fn with_moduli(
        matrix: DenseMatrix,
        offset: RealVector,
        eta: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::check_shapes(&matrix, &offset)?;
        check_moduli(eta, lipschitz)?;
        let (se, sl) = spectral_moduli(&matrix)?;
        let close = |a: f64, b: f64| (a - b).abs() <= MODULI_TOLERANCE * a.abs().max(b.abs());
        if !close(eta, se) || !close(lipschitz, sl) {
            return Err(Error::InvalidArgs(format!(
                "stored moduli ({eta}, {lipschitz}) disagree with spectrum ({se}, {sl})"
            )));
        }
        Ok(Self {
            matrix,
            offset,
            eta,
            lipschitz,
        })
    }

    /// Builds the operator with caller-asserted moduli that are not checked
    /// against the spectrum. Use [`Operator::certify_moduli`] to test them.
    pub fn declared(
        matrix: DenseMatrix,
        offset: RealVector,
        eta: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::check_shapes(&matrix, &offset)?;
        check_moduli(eta, lipschitz)?;
        Ok(Self {
            matrix,
            offset,
            eta,
            lipschitz,
        })
    }

    fn check_shapes(matrix: &DenseMatrix, offset: &RealVector) -> Result<()> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidArgs(
                "operator dimension must be positive".into(),
            ));
        }
        check_len(offset, matrix.nrows())?;
        ensure_finite_matrix(matrix, "operator matrix")?;
        ensure_finite_vector(offset, "operator offset")
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &RealVector {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn eval(&self, z: &RealVector) -> Result<RealVector> {
        check_len(z, self.dim())?;
        Ok(&self.matrix * z + &self.offset)
    }

    /// Factorizes `γ M + I` once for repeated resolvent evaluations.
    pub fn resolvent_factor(&self, gamma: f64) -> Result<AffineResolvent> {
        check_gamma(gamma)?;
        let n = self.dim();
        let system = &self.matrix * gamma + DenseMatrix::identity(n, n);
        Ok(AffineResolvent {
            lu: LuFactor::new(&system)?,
            shift: &self.offset * gamma,
        })
    }

    pub fn resolvent(&self, gamma: f64, w: &RealVector) -> Result<RealVector> {
        check_len(w, self.dim())?;
        self.resolvent_factor(gamma)?.apply(w)
    }

    pub fn scale(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            matrix: &self.matrix * gamma,
            offset: &self.offset * gamma,
            eta: self.eta * gamma,
            lipschitz: self.lipschitz * gamma,
        })
    }
}

/// Prefactored `(γ M + I)⁻¹ (w - γ b)`.
#[derive(Debug, Clone)]
pub struct AffineResolvent {
    lu: LuFactor,
    shift: RealVector,
}

impl AffineResolvent {
    pub fn apply(&self, w: &RealVector) -> Result<RealVector> {
        check_len(w, self.shift.len())?;
        self.lu.solve(&(w - &self.shift))
    }
}

/// An operator known only through its action and its resolvent.
#[derive(Clone)]
pub struct BlackBoxOperator {
    dim: usize,
    evaluator: Evaluator,
    resolvent: ResolventEvaluator,
    eta: f64,
    lipschitz: f64,
}

impl fmt::Debug for BlackBoxOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxOperator")
            .field("dim", &self.dim)
            .field("eta", &self.eta)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl BlackBoxOperator {
    /// `resolvent(γ, w)` must return `z` with `w - z ∈ γ T(z)`.
    pub fn new(
        dim: usize,
        evaluator: Evaluator,
        resolvent: ResolventEvaluator,
        declared_eta: f64,
        declared_lipschitz: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgs(
                "operator dimension must be positive".into(),
            ));
        }
        check_moduli(declared_eta, declared_lipschitz)?;
        Ok(Self {
            dim,
            evaluator,
            resolvent,
            eta: declared_eta,
            lipschitz: declared_lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn checked_output(&self, v: RealVector) -> Result<RealVector> {
        check_len(&v, self.dim)?;
        ensure_finite_vector(&v, "black-box output")?;
        Ok(v)
    }

    pub fn eval(&self, z: &RealVector) -> Result<RealVector> {
        check_len(z, self.dim)?;
        self.checked_output((self.evaluator)(z))
    }

    pub fn resolvent(&self, gamma: f64, w: &RealVector) -> Result<RealVector> {
        check_gamma(gamma)?;
        check_len(w, self.dim)?;
        self.checked_output((self.resolvent)(gamma, w))
    }

    pub fn scale(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let eval = Arc::clone(&self.evaluator);
        let res = Arc::clone(&self.resolvent);
        Ok(Self {
            dim: self.dim,
            evaluator: Arc::new(move |z| eval(z) * gamma),
            // (λ(γT) + I)⁻¹ = ((λγ)T + I)⁻¹
            resolvent: Arc::new(move |lambda, w| res(lambda * gamma, w)),
            eta: self.eta * gamma,
            lipschitz: self.lipschitz * gamma,
        })
    }
}

/// A single-valued maximal monotone operator satisfying strong monotonicity and Lipschitz continuity.
#[derive(Debug, Clone)]
pub enum Operator {
    Affine(AffineOperator),
    BlackBox(BlackBoxOperator),
}

impl From<AffineOperator> for Operator {
    fn from(op: AffineOperator) -> Self {
        Operator::Affine(op)
    }
}

impl From<BlackBoxOperator> for Operator {
    fn from(op: BlackBoxOperator) -> Self {
        Operator::BlackBox(op)
    }
}

/// Worst slacks observed by [`Operator::certify_moduli`]; positive means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliReport {
    pub samples: usize,
    pub worst_monotonicity_slack: f64,
    pub worst_lipschitz_slack: f64,
}

/// A resolvent `(γT + I)⁻¹` with `γ` fixed, prepared for repeated use.
pub enum ResolventMap<'a> {
    Affine(AffineResolvent),
    BlackBox {
        op: &'a BlackBoxOperator,
        gamma: f64,
    },
}

impl ResolventMap<'_> {
    pub fn apply(&self, w: &RealVector) -> Result<RealVector> {
        match self {
            ResolventMap::Affine(r) => r.apply(w),
            ResolventMap::BlackBox { op, gamma } => op.resolvent(*gamma, w),
        }
    }
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Affine(op) => op.dim(),
            Operator::BlackBox(op) => op.dim(),
        }
    }

    pub fn eta(&self) -> f64 {
        match self {
            Operator::Affine(op) => op.eta,
            Operator::BlackBox(op) => op.eta,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Operator::Affine(op) => op.lipschitz,
            Operator::BlackBox(op) => op.lipschitz,
        }
    }

    pub fn as_affine(&self) -> Option<&AffineOperator> {
        match self {
            Operator::Affine(op) => Some(op),
            Operator::BlackBox(_) => None,
        }
    }

    pub fn eval(&self, z: &RealVector) -> Result<RealVector> {
        match self {
            Operator::Affine(op) => op.eval(z),
            Operator::BlackBox(op) => op.eval(z),
        }
    }

    /// `(γT + I)⁻¹ w`, i.e. the `z` with `w - z ∈ γ T(z)`.
    pub fn resolvent(&self, gamma: f64, w: &RealVector) -> Result<RealVector> {
        match self {
            Operator::Affine(op) => op.resolvent(gamma, w),
            Operator::BlackBox(op) => op.resolvent(gamma, w),
        }
    }

    pub fn resolvent_map(&self, gamma: f64) -> Result<ResolventMap<'_>> {
        match self {
            Operator::Affine(op) => Ok(ResolventMap::Affine(op.resolvent_factor(gamma)?)),
            Operator::BlackBox(op) => {
                check_gamma(gamma)?;
                Ok(ResolventMap::BlackBox { op, gamma })
            }
        }
    }

    /// `γT`, with moduli `(γη, γL)`.
    pub fn scale(&self, gamma: f64) -> Result<Operator> {
        Ok(match self {
            Operator::Affine(op) => Operator::Affine(op.scale(gamma)?),
            Operator::BlackBox(op) => Operator::BlackBox(op.scale(gamma)?),
        })
    }

    /// Checks the stored moduli on `n_samples` standard-normal pairs.
    pub fn certify_moduli(&self, n_samples: usize, seed: u64) -> Result<ModuliReport> {
        if n_samples == 0 {
            return Err(Error::InvalidArgs("n_samples must be at least 1".into()));
        }
        let n = self.dim();
        let (eta, lipschitz) = (self.eta(), self.lipschitz());
        let mut rng = sampling::rng(seed);
        let mut report = ModuliReport {
            samples: n_samples,
            worst_monotonicity_slack: f64::INFINITY,
            worst_lipschitz_slack: f64::INFINITY,
        };
        for sample in 0..n_samples {
            let z = sampling::gaussian_vector(&mut rng, n);
            let zp = sampling::gaussian_vector(&mut rng, n);
            let dz = &z - &zp;
            let dv = self.eval(&z)? - self.eval(&zp)?;
            let mono = dz.dot(&dv) - eta * dz.norm_squared();
            let lip = lipschitz * dz.norm() - dv.norm();
            report.worst_monotonicity_slack = report.worst_monotonicity_slack.min(mono);
            report.worst_lipschitz_slack = report.worst_lipschitz_slack.min(lip);
            let violated = if mono < -CERTIFY_SLACK {
                Some((Modulus::StrongMonotonicity, mono))
            } else if lip < -CERTIFY_SLACK {
                Some((Modulus::Lipschitz, lip))
            } else {
                None
            };
            if let Some((which, slack)) = violated {
                return Err(Error::ModulusViolated {
                    which,
                    sample,
                    slack,
                    z: z.as_slice().to_vec(),
                    z_prime: zp.as_slice().to_vec(),
                });
            }
        }
        Ok(report)
    }
}
