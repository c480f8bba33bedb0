use thiserror::Error;

/// Errors produced by the pulse, bias, link and gain computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or search did not reach its tolerance.
    #[error("numerical error in {operation}: {detail}")]
    Numerical {
        operation: &'static str,
        detail: String,
    },

    /// A periodic sum needs more terms than the hard cap allows.
    #[error(
        "divergent pulse-train sum: {required} terms per side needed (cap {cap}); roll-off too small?"
    )]
    Divergence { required: u64, cap: u64 },

    /// A caller-side precondition was violated (guard too short, ISI contract, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The operation is not defined for this combination of inputs.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
