use thiserror::Error;

/// Errors raised by the occupation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OccError {
    /// Invalid parameters or configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Value outside the domain of an operation (negative weight, negative horizon, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Mismatched lengths or grids.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Support queried on an occupation that never accumulated or observed a level.
    #[error("empty support: no level has been recorded")]
    EmptySupport,
    /// Barycenter or normalisation of an occupation with zero mass.
    #[error("empty occupation: total mass is zero")]
    EmptyOccupation,
    /// Root finding failed or price outside no-arbitrage bounds.
    #[error("no solution: {0}")]
    NoSolution(String),
    /// Query outside the quoted strike/maturity range.
    #[error("extrapolation error: {0}")]
    Extrapolation(String),
    /// Non-finite state met during path simulation.
    #[error("simulation aborted at step {step}, path {path}: {detail}")]
    Simulation {
        step: usize,
        path: usize,
        detail: String,
    },
    /// Empty path ensemble.
    #[error("empty ensemble")]
    EmptyEnsemble,
    /// Serialization or parsing failure.
    #[error("format error: {0}")]
    Format(String),
}

impl OccError {
    /// True for errors caused by user configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            OccError::Config(_) | OccError::Dimension(_) | OccError::Format(_) | OccError::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, OccError>;
