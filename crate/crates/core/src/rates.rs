//! Linear-rate factors, iteration-complexity bounds, and trace certification.
//!
//! Two analyses of SPDG are implemented side by side:
//!
//! - the fixed-point analysis, contraction `1 - 2γη/(1 + γL)²` on
//!   `‖x* - x_k‖² + γ²‖u* - y_k‖²`, optimal at `γ = 1/L` with `1 - η/(2L)`;
//! - the partial-inverse analysis, contraction
//!   `1 - 2γη/((1 + γL)² - 2γ(L - η))`, also optimal at `γ = 1/L` with
//!   `1 - η/(η + L)`, applying to the step length, the feasibility residual
//!   and the distance to the solution.
//!
//! The second comes from the proximal point factor `1 - 2λμ/(1 + 2λμ)` with
//! `λ = 1` and `μ = γη/(1 + (γL)²)`.

use crate::error::{Error, Result};
use crate::linalg::RealVector;
use crate::problem::{InclusionProblem, Solution};
use crate::solvers::SolverTrace;

/// Relative slack (times `d₀²`) on every certified inequality.
pub const BOUND_SLACK: f64 = 1e-9;
/// Floor on the slack scale, relative to `‖x*‖² + γ²‖u*‖²`, used when `d₀ ≈ 0`.
pub const SLACK_FLOOR: f64 = 1e-12;

fn check_pair(eta: f64, lipschitz: f64) -> Result<()> {
    if eta > 0.0 && lipschitz >= eta && lipschitz.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgs(format!(
            "need 0 < eta <= L, got eta = {eta}, L = {lipschitz}"
        )))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgs(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

/// `1 - 2λμ / (1 + 2λμ)`.
pub fn pp_rate_factor(lambda: f64, mu: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    let t = 2.0 * lambda * mu;
    Ok(1.0 - t / (1.0 + t))
}

/// `γη / (1 + (γL)²)`, the modulus of `(γT)_V`.
pub fn scaled_modulus(eta: f64, lipschitz: f64, gamma: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    check_positive("gamma", gamma)?;
    let gl = gamma * lipschitz;
    Ok(gamma * eta / (1.0 + gl * gl))
}

/// `1 - 2γη / (1 + γL)²`.
pub fn spdg_factor_old(eta: f64, lipschitz: f64, gamma: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    check_positive("gamma", gamma)?;
    let d = 1.0 + gamma * lipschitz;
    Ok(1.0 - 2.0 * gamma * eta / (d * d))
}

/// `1 - η / (2L)`.
pub fn spdg_factor_old_opt(eta: f64, lipschitz: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    Ok(1.0 - eta / (2.0 * lipschitz))
}

/// `1 - 2γη / ((1 + γL)² - 2γ(L - η))`.
pub fn spdg_factor_new(eta: f64, lipschitz: f64, gamma: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    check_positive("gamma", gamma)?;
    let d = 1.0 + gamma * lipschitz;
    let denom = d * d - 2.0 * gamma * (lipschitz - eta);
    Ok(1.0 - 2.0 * gamma * eta / denom)
}

/// `1 - η / (η + L)`.
pub fn spdg_factor_new_opt(eta: f64, lipschitz: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    Ok(1.0 - eta / (eta + lipschitz))
}

/// `1 / ln(2L / (2L - η))`.
pub fn log_constant_old(eta: f64, lipschitz: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    Ok(1.0 / (2.0 * lipschitz / (2.0 * lipschitz - eta)).ln())
}

/// `1 / ln((η + L) / L)`.
pub fn log_constant_new(eta: f64, lipschitz: f64) -> Result<f64> {
    check_pair(eta, lipschitz)?;
    Ok(1.0 / ((eta + lipschitz) / lipschitz).ln())
}

fn iteration_bound(constant: f64, d0: f64, rho: f64) -> Result<f64> {
    if !(d0 >= 0.0) || !d0.is_finite() {
        return Err(Error::InvalidArgs(format!(
            "d0 must be nonnegative, got {d0}"
        )));
    }
    check_positive("rho", rho)?;
    let d0_sq = d0 * d0;
    if d0_sq <= rho {
        return Ok(2.0);
    }
    Ok(2.0 + constant * (d0_sq / rho).ln())
}

/// `2 + ln(d₀²/ρ) / ln(2L/(2L - η))`, real-valued; callers take the ceiling.
pub fn iteration_bound_old(eta: f64, lipschitz: f64, d0: f64, rho: f64) -> Result<f64> {
    iteration_bound(log_constant_old(eta, lipschitz)?, d0, rho)
}

/// `2 + ln(d₀²/ρ) / ln((η + L)/L)`, real-valued; callers take the ceiling.
pub fn iteration_bound_new(eta: f64, lipschitz: f64, d0: f64, rho: f64) -> Result<f64> {
    iteration_bound(log_constant_new(eta, lipschitz)?, d0, rho)
}

/// `d₀² = ‖x* - x₀‖² + γ²‖u* - y₀‖²`.
pub fn initial_distance_sq(
    solution: &Solution,
    x0: &RealVector,
    y0: &RealVector,
    gamma: f64,
) -> f64 {
    (&solution.x - x0).norm_squared() + gamma * gamma * (&solution.u - y0).norm_squared()
}

/// All factors and bounds for one `(η, L, γ)` and optionally `(d₀, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    pub eta: f64,
    pub lipschitz: f64,
    pub gamma: f64,
    pub mu_scaled: f64,
    pub factor_old: f64,
    pub factor_old_opt: f64,
    pub factor_new: f64,
    pub factor_new_opt: f64,
    pub log_constant_old: f64,
    pub log_constant_new: f64,
    pub d0: Option<f64>,
    pub rho: Option<f64>,
    pub iters_old: Option<f64>,
    pub iters_new: Option<f64>,
}

impl RateCertificate {
    pub fn new(eta: f64, lipschitz: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            eta,
            lipschitz,
            gamma,
            mu_scaled: scaled_modulus(eta, lipschitz, gamma)?,
            factor_old: spdg_factor_old(eta, lipschitz, gamma)?,
            factor_old_opt: spdg_factor_old_opt(eta, lipschitz)?,
            factor_new: spdg_factor_new(eta, lipschitz, gamma)?,
            factor_new_opt: spdg_factor_new_opt(eta, lipschitz)?,
            log_constant_old: log_constant_old(eta, lipschitz)?,
            log_constant_new: log_constant_new(eta, lipschitz)?,
            d0: None,
            rho: None,
            iters_old: None,
            iters_new: None,
        })
    }

    pub fn with_tolerance(mut self, d0: f64, rho: f64) -> Result<Self> {
        self.iters_old = Some(iteration_bound_old(self.eta, self.lipschitz, d0, rho)?);
        self.iters_new = Some(iteration_bound_new(self.eta, self.lipschitz, d0, rho)?);
        self.d0 = Some(d0);
        self.rho = Some(rho);
        Ok(self)
    }
}

/// Which inequality a [`BoundCheck`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// step length `‖x_{k-1} - x_k‖² + γ²‖y_{k-1} - y_k‖² ≤ f^{k-1} d₀²`
    Step,
    /// feasibility `‖x̃_k - P_V x̃_k‖² + γ²‖u_k - P_{V⊥} u_k‖² ≤ f^{k-1} d₀²`
    Feasibility,
    /// distance `‖x* - x_k‖² + γ²‖u* - y_k‖² ≤ f^k d₀²`
    Distance,
    /// the same distance against the fixed-point factor
    DistanceOld,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [
        Inequality::Step,
        Inequality::Feasibility,
        Inequality::Distance,
        Inequality::DistanceOld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Step => "step",
            Inequality::Feasibility => "feasibility",
            Inequality::Distance => "distance",
            Inequality::DistanceOld => "distance-old",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub inequality: Inequality,
    /// Largest `lhs / rhs` over all iterations (≤ 1 up to slack).
    pub tightest_ratio: f64,
    pub tightest_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceCertificate {
    pub d0_sq: f64,
    pub slack: f64,
    pub factor_new: f64,
    pub factor_old: f64,
    pub checks: Vec<BoundCheck>,
    /// Largest per-iteration ratio of successive distances (squared), over
    /// iterations where the previous distance is resolvable in floating point.
    pub max_contraction: f64,
    pub iterations: usize,
}

impl TraceCertificate {
    pub fn check(&self, inequality: Inequality) -> &BoundCheck {
        self.checks
            .iter()
            .find(|c| c.inequality == inequality)
            .expect("all inequalities are checked")
    }
}

/// Distances below this fraction of `d₀²` are excluded from the empirical contraction.
pub const CONTRACTION_FLOOR: f64 = 1e-16;

/// Checks every rate inequality at every iteration of `trace`.
///
/// Uses the moduli stored on the problem's operator and `γ` from the trace.
pub fn certify_trace(trace: &SolverTrace, problem: &InclusionProblem) -> Result<TraceCertificate> {
    let solution = problem
        .solution()
        .ok_or_else(|| Error::InvalidArgs("certification needs the reference solution".into()))?;
    let op = problem.operator();
    let (eta, lipschitz) = (op.eta(), op.lipschitz());
    let gamma = trace.config.gamma;
    let g2 = gamma * gamma;
    let factor_new = spdg_factor_new(eta, lipschitz, gamma)?;
    let factor_old = spdg_factor_old(eta, lipschitz, gamma)?;
    let d0_sq = initial_distance_sq(solution, &trace.x0, &trace.y0, gamma);
    let scale_sq = solution.x.norm_squared() + g2 * solution.u.norm_squared();
    let slack = BOUND_SLACK * d0_sq.max(SLACK_FLOOR * scale_sq);
    let v = problem.subspace();

    let mut checks: Vec<BoundCheck> = Inequality::ALL
        .iter()
        .map(|&inequality| BoundCheck {
            inequality,
            tightest_ratio: 0.0,
            tightest_k: 0,
        })
        .collect();
    let mut max_contraction: f64 = 0.0;
    let mut prev_dist = d0_sq;
    let (mut x_prev, mut y_prev) = (trace.x0.clone(), trace.y0.clone());

    for rec in &trace.records {
        let k = rec.k;
        let (step_sq, feas_sq, dist_sq) = match &rec.vectors {
            Some(it) => {
                let step = (&x_prev - &it.x).norm_squared() + g2 * (&y_prev - &it.y).norm_squared();
                let feas = v.complement_unchecked(&it.x_tilde).norm_squared()
                    + g2 * v.project_unchecked(&it.u).norm_squared();
                let dist = (&solution.x - &it.x).norm_squared()
                    + g2 * (&solution.u - &it.y).norm_squared();
                x_prev = it.x.clone();
                y_prev = it.y.clone();
                (step, feas, dist)
            }
            None => {
                let dist = rec.distance_sq.ok_or(Error::ThinTrace)?;
                (rec.step_sq, rec.feasibility_sq, dist)
            }
        };
        let pow = |f: f64, e: usize| f.powi(e as i32);
        let rhs = [
            pow(factor_new, k - 1) * d0_sq,
            pow(factor_new, k - 1) * d0_sq,
            pow(factor_new, k) * d0_sq,
            pow(factor_old, k) * d0_sq,
        ];
        let lhs = [step_sq, feas_sq, dist_sq, dist_sq];
        for (check, (&l, &r)) in checks.iter_mut().zip(lhs.iter().zip(&rhs)) {
            if !(l <= r + slack) {
                return Err(Error::BoundViolated {
                    inequality: check.inequality.name(),
                    k,
                    lhs: l,
                    rhs: r,
                });
            }
            let ratio = if r > 0.0 { l / r } else { 0.0 };
            if ratio > check.tightest_ratio {
                check.tightest_ratio = ratio;
                check.tightest_k = k;
            }
        }
        if prev_dist > CONTRACTION_FLOOR * d0_sq && prev_dist > 0.0 {
            max_contraction = max_contraction.max(dist_sq / prev_dist);
        }
        prev_dist = dist_sq;
    }

    Ok(TraceCertificate {
        d0_sq,
        slack,
        factor_new,
        factor_old,
        checks,
        max_contraction,
        iterations: trace.records.len(),
    })
}

/// First `k` whose squared residual is at most `rho`.
pub fn first_iterate_within(trace: &SolverTrace, rho: f64) -> Option<usize> {
    trace
        .records
        .iter()
        .find(|r| r.residual * r.residual <= rho)
        .map(|r| r.k)
}
