use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The constrained steady-state system has no unique solution.
    #[error("steady-state system is singular (relative pivot {relative_pivot:.3e})")]
    SingularSystem { relative_pivot: f64 },

    /// Adaptive time integration could not meet its error tolerance.
    #[error("time integration did not converge: {0}")]
    NonConvergent(String),

    /// A root or fixed-point search failed to bracket or converge.
    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("degenerate response curve: {0}")]
    DegenerateCurve(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
