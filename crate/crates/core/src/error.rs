use thiserror::Error;

/// Errors produced by the game engine, synthesis and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("enumeration budget exceeded: {needed} states requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("state index {index} out of range for a space of {size} states")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("invalid strategy row for state {state}: {reason}")]
    InvalidStrategy { state: u64, reason: String },

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("no feasible ZD pinning: alpha0_min exceeds alpha0_max by {gap}")]
    Infeasible { gap: f64 },

    #[error("roster error: {0}")]
    Roster(String),

    #[error("scenario error at `{path}`: {reason}")]
    Scenario { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
