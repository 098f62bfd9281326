use thiserror::Error;

/// Every failure mode surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("column {column} is linearly dependent (residual norm {residual:e} below tolerance {tolerance:e})")]
    RankDeficient {
        column: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("singular matrix: pivot {pivot:e} at step {step} below threshold {threshold:e}")]
    SingularMatrix {
        step: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("operator is not strongly monotone (eta = {eta:e}, L = {lipschitz:e})")]
    NotStronglyMonotone { eta: f64, lipschitz: f64 },

    #[error("scaling factor must be positive, got {0}")]
    NonpositiveGamma(f64),

    #[error("invalid moduli: eta = {eta}, L = {lipschitz} (need 0 < eta <= L)")]
    InvalidModuli { eta: f64, lipschitz: f64 },

    #[error("declared {which} modulus violated by sampled pair {sample}: slack {slack:e}")]
    ModulusViolated {
        which: Modulus,
        sample: usize,
        slack: f64,
        z: Vec<f64>,
        z_prime: Vec<f64>,
    },

    #[error("partial inverse failed strong monotonicity at sample {sample}: ratio {ratio:e} < mu {mu:e}")]
    PartialInverseNotMonotone {
        sample: usize,
        ratio: f64,
        mu: f64,
        z: Vec<f64>,
        z_prime: Vec<f64>,
    },

    #[error("proximal-point equivalence violated at iteration {k}: {what} error {error:e} exceeds {tolerance:e}")]
    EquivalenceViolated {
        k: usize,
        what: &'static str,
        error: f64,
        tolerance: f64,
    },

    #[error("bound {inequality} violated at iteration {k}: lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolated {
        inequality: &'static str,
        k: usize,
        lhs: f64,
        rhs: f64,
    },

    #[error("oracle solution failed check `{check}`: residual {residual:e} exceeds {tolerance:e}")]
    OracleCheckFailed {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("trace was recorded in thin mode; iterate vectors are unavailable")]
    ThinTrace,

    #[error("operation requires an affine operator")]
    NotAffine,

    #[error(
        "sweep cell (seed {seed}, n = {dim}, L/eta = {cond}, gamma = {gamma}) failed: {source}"
    )]
    SweepCell {
        seed: u64,
        dim: usize,
        cond: f64,
        gamma: f64,
        source: Box<Error>,
    },

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("empty input")]
    EmptyInput,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Which operator modulus a sampled pair violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulus {
    StrongMonotonicity,
    Lipschitz,
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modulus::StrongMonotonicity => f.write_str("strong-monotonicity"),
            Modulus::Lipschitz => f.write_str("Lipschitz"),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
