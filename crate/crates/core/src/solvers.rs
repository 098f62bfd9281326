//! The proximal point method and the SPDG algorithm.
//!
//! One SPDG iteration with scaling `γ > 0` from `x_{k-1} ∈ V`, `y_{k-1} ∈ V⊥`:
//!
//! ```text
//! x̃_k = (γT + I)⁻¹(x_{k-1} + γ y_{k-1})
//! u_k = (x_{k-1} + γ y_{k-1} - x̃_k) / γ
//! x_k = P_V x̃_k,   y_k = P_{V⊥} u_k
//! ```
//!
//! With `z_k = x_k + γ y_k` the sequence `z_k` is exactly the proximal point
//! iteration `z_k = ((γT)_V + I)⁻¹ z_{k-1}`; [`check_pp_equivalence`] verifies
//! that against the direct affine resolvent of the partial inverse.

use crate::error::{Error, Result};
use crate::linalg::{OrthoSubspace, RealVector};
use crate::operators::{Operator, ResolventMap};
use crate::partial_inverse::PartialInverseOperator;
use crate::problem::InclusionProblem;

/// Tolerance for `x ∈ V`, `y ∈ V⊥` on SPDG inputs.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;
/// `‖z_k - ((γT)_V + I)⁻¹ z_{k-1}‖` tolerance in [`check_pp_equivalence`].
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;
/// Tolerance on the displacement identity in [`check_pp_equivalence`].
pub const DISPLACEMENT_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_RHO: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// A prepared resolvent `w ↦ (λA + I)⁻¹ w`.
pub type ResolventFn<'a> = Box<dyn Fn(&RealVector) -> Result<RealVector> + 'a>;

/// Anything with a computable resolvent `(λA + I)⁻¹`.
pub trait ProximalMap {
    fn dim(&self) -> usize;

    /// `w ↦ (λA + I)⁻¹ w` for a fixed `λ`, prepared once.
    fn resolvent_fn(&self, lambda: f64) -> Result<ResolventFn<'_>>;
}

impl ProximalMap for Operator {
    fn dim(&self) -> usize {
        Operator::dim(self)
    }

    fn resolvent_fn(&self, lambda: f64) -> Result<ResolventFn<'_>> {
        let map = self.resolvent_map(lambda)?;
        Ok(Box::new(move |w| map.apply(w)))
    }
}

impl ProximalMap for PartialInverseOperator {
    fn dim(&self) -> usize {
        PartialInverseOperator::dim(self)
    }

    fn resolvent_fn(&self, lambda: f64) -> Result<ResolventFn<'_>> {
        if self.operator().as_affine().is_some() {
            if lambda != 1.0 {
                // validate once; each call refactors
                self.resolvent_direct(lambda, &RealVector::zeros(self.dim()))?;
            }
            Ok(Box::new(move |w| self.resolvent_direct(lambda, w)))
        } else if lambda == 1.0 {
            Ok(Box::new(move |w| self.resolvent_via_graph_step(w)))
        } else {
            Err(Error::InvalidArgs(
                "partial inverse of a black-box operator supports only λ = 1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

/// Iterates of the proximal point method, `iterates[0] = z₀`.
#[derive(Debug, Clone)]
pub struct PpTrace {
    pub lambda: f64,
    pub iterates: Vec<RealVector>,
    /// `‖z_{k-1} - z_k‖` for `k ≥ 1` (index `k - 1`).
    pub displacements: Vec<f64>,
    pub termination: Termination,
}

/// `z_k = (λA + I)⁻¹ z_{k-1}` until `‖z_{k-1} - z_k‖ ≤ stop_tol` or `max_iters`.
pub fn pp_solve(
    a: &dyn ProximalMap,
    z0: &RealVector,
    lambda: f64,
    max_iters: usize,
    stop_tol: f64,
) -> Result<PpTrace> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgs(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgs("max_iters must be at least 1".into()));
    }
    if z0.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: z0.len(),
        });
    }
    let resolvent = a.resolvent_fn(lambda)?;
    let mut iterates = vec![z0.clone()];
    let mut displacements = Vec::new();
    let mut termination = Termination::MaxIters;
    for _ in 0..max_iters {
        let prev = iterates.last().expect("nonempty");
        let next = resolvent(prev)?;
        let step = (prev - &next).norm();
        iterates.push(next);
        displacements.push(step);
        if step <= stop_tol {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(PpTrace {
        lambda,
        iterates,
        displacements,
        termination,
    })
}

/// What an SPDG trace keeps per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Every iterate vector.
    #[default]
    Full,
    /// Scalar summaries only, for long runs.
    Thin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdgConfig {
    pub gamma: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub mode: TraceMode,
}

impl SpdgConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::NonpositiveGamma(gamma));
        }
        Ok(Self {
            gamma,
            rho: DEFAULT_RHO,
            max_iters: DEFAULT_MAX_ITERS,
            mode: TraceMode::Full,
        })
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidArgs(format!(
                "rho must be nonnegative, got {rho}"
            )));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::InvalidArgs("max_iters must be at least 1".into()));
        }
        self.max_iters = max_iters;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: TraceMode) -> Self {
        self.mode = mode;
        self
    }
}

/// The four vectors produced by one SPDG iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdgStep {
    pub x_tilde: RealVector,
    pub u: RealVector,
    pub x: RealVector,
    pub y: RealVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateVectors {
    pub x_tilde: RealVector,
    pub u: RealVector,
    pub x: RealVector,
    pub y: RealVector,
    /// `x + γ y`
    pub z: RealVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    /// `max{‖x̃ - P_V x̃‖, γ‖u - P_{V⊥} u‖}`
    pub residual: f64,
    /// `‖x_{k-1} - x_k‖² + γ²‖y_{k-1} - y_k‖²`
    pub step_sq: f64,
    /// `‖x̃_k - P_V x̃_k‖² + γ²‖u_k - P_{V⊥} u_k‖²`
    pub feasibility_sq: f64,
    /// `‖x* - x_k‖² + γ²‖u* - y_k‖²`, when the problem carries its solution.
    pub distance_sq: Option<f64>,
    pub vectors: Option<IterateVectors>,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub config: SpdgConfig,
    pub x0: RealVector,
    pub y0: RealVector,
    pub records: Vec<IterateRecord>,
    pub final_x: RealVector,
    pub final_y: RealVector,
    pub termination: Termination,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    /// `(x_k, y_k)` for `k = 0..=K`, if the trace is full.
    pub fn primal_dual(&self, k: usize) -> Result<(&RealVector, &RealVector)> {
        if k == 0 {
            return Ok((&self.x0, &self.y0));
        }
        let v = self.records[k - 1]
            .vectors
            .as_ref()
            .ok_or(Error::ThinTrace)?;
        Ok((&v.x, &v.y))
    }
}

fn check_feasible(v: &OrthoSubspace, x: &RealVector, y: &RealVector) -> Result<()> {
    for (vec, inside, what) in [(x, true, "x"), (y, false, "y")] {
        if vec.len() != v.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: v.ambient_dim(),
                got: vec.len(),
            });
        }
        let off = if inside {
            v.complement_unchecked(vec).norm()
        } else {
            v.project_unchecked(vec).norm()
        };
        if off > FEASIBILITY_TOLERANCE * (1.0 + vec.norm()) {
            let space = if inside { "V" } else { "V⊥" };
            return Err(Error::InvalidArgs(format!(
                "{what} is not in {space} (distance {off:e})"
            )));
        }
    }
    Ok(())
}

fn step_with(
    resolvent: &ResolventMap<'_>,
    v: &OrthoSubspace,
    gamma: f64,
    x_prev: &RealVector,
    y_prev: &RealVector,
) -> Result<SpdgStep> {
    let w = x_prev + y_prev * gamma;
    let x_tilde = resolvent.apply(&w)?;
    let u = (&w - &x_tilde) / gamma;
    let x = v.project_unchecked(&x_tilde);
    let y = v.complement_unchecked(&u);
    Ok(SpdgStep { x_tilde, u, x, y })
}

/// One SPDG iteration from `(x_prev, y_prev) ∈ V × V⊥`.
pub fn spdg_step(
    op: &Operator,
    v: &OrthoSubspace,
    gamma: f64,
    x_prev: &RealVector,
    y_prev: &RealVector,
) -> Result<SpdgStep> {
    if op.dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: v.ambient_dim(),
        });
    }
    check_feasible(v, x_prev, y_prev)?;
    let resolvent = op.resolvent_map(gamma)?;
    step_with(&resolvent, v, gamma, x_prev, y_prev)
}

/// `max{‖x̃ - P_V x̃‖, γ‖u - P_{V⊥} u‖}`.
///
/// # Panics
/// If the vector lengths differ from the ambient dimension of `v`.
pub fn residual(x_tilde: &RealVector, u: &RealVector, gamma: f64, v: &OrthoSubspace) -> f64 {
    let (a, b) = residual_parts(x_tilde, u, gamma, v);
    a.max(b)
}

fn residual_parts(
    x_tilde: &RealVector,
    u: &RealVector,
    gamma: f64,
    v: &OrthoSubspace,
) -> (f64, f64) {
    let a = v.complement_unchecked(x_tilde).norm();
    let b = gamma * v.project_unchecked(u).norm();
    (a, b)
}

/// SPDG from `x₀ = 0`, `y₀ = 0`.
pub fn spdg_solve(problem: &InclusionProblem, config: &SpdgConfig) -> Result<SolverTrace> {
    let n = problem.dim();
    spdg_solve_from(
        problem,
        config,
        &RealVector::zeros(n),
        &RealVector::zeros(n),
    )
}

/// SPDG from a caller-chosen `(x₀, y₀) ∈ V × V⊥`.
///
/// Stops once the residual is at most `config.rho`.
pub fn spdg_solve_from(
    problem: &InclusionProblem,
    config: &SpdgConfig,
    x0: &RealVector,
    y0: &RealVector,
) -> Result<SolverTrace> {
    let v = problem.subspace();
    let gamma = config.gamma;
    check_feasible(v, x0, y0)?;
    let resolvent = problem.operator().resolvent_map(gamma)?;
    let g2 = gamma * gamma;
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut termination = Termination::MaxIters;
    for k in 1..=config.max_iters {
        let step = step_with(&resolvent, v, gamma, &x, &y)?;
        let (ra, rb) = residual_parts(&step.x_tilde, &step.u, gamma, v);
        let step_sq = (&x - &step.x).norm_squared() + g2 * (&y - &step.y).norm_squared();
        let distance_sq = problem
            .solution()
            .map(|s| (&s.x - &step.x).norm_squared() + g2 * (&s.u - &step.y).norm_squared());
        let residual = ra.max(rb);
        let vectors = match config.mode {
            TraceMode::Full => Some(IterateVectors {
                z: &step.x + &step.y * gamma,
                x_tilde: step.x_tilde,
                u: step.u,
                x: step.x.clone(),
                y: step.y.clone(),
            }),
            TraceMode::Thin => None,
        };
        records.push(IterateRecord {
            k,
            residual,
            step_sq,
            feasibility_sq: ra * ra + rb * rb,
            distance_sq,
            vectors,
        });
        x = step.x;
        y = step.y;
        if residual <= config.rho {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(SolverTrace {
        config: config.clone(),
        x0: x0.clone(),
        y0: y0.clone(),
        records,
        final_x: x,
        final_y: y,
        termination,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub iterations: usize,
    /// Largest `‖z_k - ((γT)_V + I)⁻¹ z_{k-1}‖`.
    pub max_resolvent_error: f64,
    /// Largest `‖(z_{k-1} - z_k) - (P_V(γ u_k) + P_{V⊥}(x̃_k))‖`.
    pub max_displacement_error: f64,
}

/// Checks, for every iteration of a full trace of an affine problem, that
/// `z_k` equals the direct resolvent of `(γT)_V` at `z_{k-1}` and that
/// `z_{k-1} - z_k = P_V(γ u_k) + P_{V⊥}(x̃_k)`.
pub fn check_pp_equivalence(
    problem: &InclusionProblem,
    gamma: f64,
    trace: &SolverTrace,
) -> Result<EquivalenceReport> {
    if problem.operator().as_affine().is_none() {
        return Err(Error::NotAffine);
    }
    let scaled = problem.operator().scale(gamma)?;
    let pi = PartialInverseOperator::new(scaled, problem.subspace().clone())?;
    let v = problem.subspace();
    let mut report = EquivalenceReport {
        iterations: trace.records.len(),
        max_resolvent_error: 0.0,
        max_displacement_error: 0.0,
    };
    let mut z_prev = &trace.x0 + &trace.y0 * gamma;
    for rec in &trace.records {
        let it = rec.vectors.as_ref().ok_or(Error::ThinTrace)?;
        let z = &it.x + &it.y * gamma;
        let expected = pi.resolvent_direct(1.0, &z_prev)?;
        let err_a = (&z - &expected).norm();
        if !(err_a <= EQUIVALENCE_TOLERANCE) {
            return Err(Error::EquivalenceViolated {
                k: rec.k,
                what: "resolvent",
                error: err_a,
                tolerance: EQUIVALENCE_TOLERANCE,
            });
        }
        let predicted = v.project_unchecked(&(&it.u * gamma)) + v.complement_unchecked(&it.x_tilde);
        let err_b = ((&z_prev - &z) - predicted).norm();
        if !(err_b <= DISPLACEMENT_TOLERANCE) {
            return Err(Error::EquivalenceViolated {
                k: rec.k,
                what: "displacement",
                error: err_b,
                tolerance: DISPLACEMENT_TOLERANCE,
            });
        }
        report.max_resolvent_error = report.max_resolvent_error.max(err_a);
        report.max_displacement_error = report.max_displacement_error.max(err_b);
        z_prev = z;
    }
    Ok(report)
}
