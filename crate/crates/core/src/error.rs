use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Beta shape (alpha = {alpha}, beta = {beta}): shapes must be finite and > 0")]
    InvalidShape { alpha: f64, beta: f64 },

    #[error("invalid binomial observation: {successes} successes out of {trials} trials")]
    InvalidObservation { successes: u64, trials: u64 },

    #[error("value {value} outside the open unit interval (0, 1)")]
    Domain { value: f64 },

    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid constraint set: {0}")]
    InvalidConstraint(String),

    #[error("constraint set is unsatisfiable, relations form a cycle: {}", format_cycle(.cycle))]
    Cycle { cycle: Vec<usize> },

    #[error(
        "degenerate Monte Carlo count: {prior_count}/{prior_samples} prior and \
         {posterior_count}/{posterior_samples} posterior samples satisfy the restriction; \
         the Bayes factor is undefined. Increase the prior/posterior sample counts or \
         reformulate the constraint"
    )]
    DegenerateCount {
        prior_count: u64,
        prior_samples: u64,
        posterior_count: u64,
        posterior_samples: u64,
    },

    #[error("standard error undefined for proportion {0} (must lie strictly between 0 and 1)")]
    SaturatedProportion(f64),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("cannot compose BF_{first} with BF_{second}: inner hypotheses differ")]
    LabelMismatch { first: String, second: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Ingest { line: u64, message: String },

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("invalid counts: {0}")]
    Counts(String),
}

fn format_cycle(cycle: &[usize]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(|i| format!("theta[{i}]")).collect();
    if let Some(first) = cycle.first() {
        parts.push(format!("theta[{first}]"));
    }
    parts.join(" < ")
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCount { .. } | Error::SaturatedProportion(_) | Error::Quadrature { .. }
        )
    }
}
