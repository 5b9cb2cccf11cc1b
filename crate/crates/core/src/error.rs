use thiserror::Error;

/// Errors raised by instance validation and by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeychainError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("probabilities sum to {sum}, expected 1 (tolerance 1e-9)")]
    ProbabilitySum { sum: f64 },

    #[error(
        "inadmissible policy: key {key} is assigned twice on the path of scenario {scenario} \
         (information sets {first} and {second})"
    )]
    Inadmissible {
        scenario: usize,
        key: usize,
        first: usize,
        second: usize,
    },

    #[error("inadmissible policy: {0}")]
    InvalidPolicy(String),

    #[error("size guard exceeded: {what} is {actual}, limit {limit}")]
    SizeGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("type sets of elements {0} and {1} overlap without nesting")]
    NotLaminar(usize, usize),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex stalled after {0} pivots")]
    SolverStall(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl KeychainError {
    /// Whether the error stems from bad input rather than a solver failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            KeychainError::Infeasible
                | KeychainError::Unbounded
                | KeychainError::SolverStall(_)
                | KeychainError::Numerical(_)
                | KeychainError::SizeGuard { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, KeychainError>;
