//! End-to-end certification of one generated problem.

use crate::error::{Error, Result};
use crate::operators::ModuliReport;
use crate::partial_inverse::{MonotonicityReport, PartialInverseOperator};
use crate::rates::{certify_trace, first_iterate_within, RateCertificate, TraceCertificate};
use crate::solvers::{
    check_pp_equivalence, spdg_solve, EquivalenceReport, SolverTrace, SpdgConfig, TraceMode,
    DEFAULT_MAX_ITERS, DEFAULT_RHO,
};

use super::generator::ProblemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    /// Defaults to `1/L`.
    pub gamma: Option<f64>,
    pub rho: f64,
    pub max_iters: usize,
    pub samples: usize,
    /// Iterations replayed with full vectors for the equivalence check.
    pub equivalence_iters: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            gamma: None,
            rho: DEFAULT_RHO,
            max_iters: DEFAULT_MAX_ITERS,
            samples: 1000,
            equivalence_iters: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationBoundCheck {
    /// Squared-residual target.
    pub rho_sq: f64,
    pub first_k: Option<usize>,
    pub bound: f64,
}

impl IterationBoundCheck {
    pub fn holds(&self) -> bool {
        self.first_k.is_some_and(|k| k as f64 <= self.bound.ceil())
    }
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub rates: RateCertificate,
    pub moduli: ModuliReport,
    pub monotonicity: MonotonicityReport,
    pub equivalence: EquivalenceReport,
    pub bounds: TraceCertificate,
    pub trace: SolverTrace,
    /// Only evaluated at `γ = 1/L`, where the closed-form bound applies.
    pub iteration_bound: Option<IterationBoundCheck>,
}

/// Runs every check in turn; the first failure is returned as the error.
pub fn certify_problem(spec: &ProblemSpec, options: &CertifyOptions) -> Result<CertifyReport> {
    let problem = spec.problem_with_solution()?;
    let op = problem.operator();
    let (eta, lipschitz) = (op.eta(), op.lipschitz());
    let gamma = options.gamma.unwrap_or(1.0 / lipschitz);

    let rates = RateCertificate::new(eta, lipschitz, gamma)?;
    let moduli = op.certify_moduli(options.samples, options.seed)?;
    let pi = PartialInverseOperator::new(op.clone(), problem.subspace().clone())?;
    let monotonicity = pi.check_strong_monotonicity(options.samples, options.seed)?;

    let replay = SpdgConfig::new(gamma)?
        .with_rho(0.0)?
        .with_max_iters(options.equivalence_iters.max(1))?;
    let equivalence = check_pp_equivalence(&problem, gamma, &spdg_solve(&problem, &replay)?)?;

    let config = SpdgConfig::new(gamma)?
        .with_rho(options.rho)?
        .with_max_iters(options.max_iters)?
        .with_mode(TraceMode::Thin);
    let trace = spdg_solve(&problem, &config)?;
    let bounds = certify_trace(&trace, &problem)?;

    let iteration_bound = if (gamma * lipschitz - 1.0).abs() <= 1e-12 {
        let rho_sq = (options.rho * options.rho).max(f64::MIN_POSITIVE);
        let check = IterationBoundCheck {
            rho_sq,
            first_k: first_iterate_within(&trace, rho_sq),
            bound: crate::rates::iteration_bound_new(eta, lipschitz, bounds.d0_sq.sqrt(), rho_sq)?,
        };
        if check.first_k.is_some() && !check.holds() {
            return Err(Error::BoundViolated {
                inequality: "iteration-count",
                k: check.first_k.unwrap_or(0),
                lhs: check.first_k.unwrap_or(0) as f64,
                rhs: check.bound.ceil(),
            });
        }
        Some(check)
    } else {
        None
    };

    Ok(CertifyReport {
        rates,
        moduli,
        monotonicity,
        equivalence,
        bounds,
        trace,
        iteration_bound,
    })
}
