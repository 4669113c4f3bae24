//! Error type shared by all modules.

use thiserror::Error;

/// Diagnostics attached to a training run that failed to converge.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDiagnostics {
    /// Number of candidate examinations performed before giving up.
    pub iterations: usize,
    /// Iteration budget that was exhausted (`max_passes * n_samples`).
    pub budget: usize,
    /// Largest KKT violation at the last iterate.
    pub max_violation: f64,
    /// Number of training samples.
    pub n_samples: usize,
    /// Cost parameter of the problem.
    pub cost: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or data handed to an operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// Feature vector length does not match what the model or dataset expects.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A file does not conform to one of the on-disk formats.
    #[error("format error: {message}{}", offset.map(|o| format!(" (byte offset {o})")).unwrap_or_default())]
    Format {
        message: String,
        offset: Option<u64>,
    },

    /// SMO exhausted its iteration budget without satisfying the KKT
    /// conditions.
    #[error("training did not converge after {} of {} iterations (max KKT violation {:.3e}, n = {}, C = {})",
            .0.iterations, .0.budget, .0.max_violation, .0.n_samples, .0.cost)]
    Convergence(ConvergenceDiagnostics),

    /// A statistic is undefined for the given distribution of counts.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Wraps an error with where-it-happened context (kernel, strategy, file).
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn format(msg: impl Into<String>, offset: Option<u64>) -> Self {
        Error::Format {
            message: msg.into(),
            offset,
        }
    }

    /// Attaches a context prefix while preserving the underlying kind.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True if the root cause is a convergence failure, digging through any
    /// context wrappers. The CLI maps this to a distinct exit code.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::Convergence(_) => true,
            Error::Context { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
