use thiserror::Error;

/// Errors shared across the laboratory modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid grid/zone/run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the domain of validity of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite samples or loss of significance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Requested variant not supported (e.g. derivative order).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Ill-conditioned fit or linear system.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A prerequisite artifact from another module is missing.
    #[error("dependency error: {0}")]
    Dependency(String),

    /// Iterative scheme failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Blow-up ceiling reached during time integration.
    #[error("blow-up detected: sup|psi| = {sup} at t = {t}")]
    BlowUp { sup: f64, t: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
