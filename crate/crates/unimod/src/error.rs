use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice basis: {0}")]
    InvalidBasis(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration volume ~{estimated} exceeds cap {cap}")]
    EnumerationCap { estimated: u64, cap: u64 },

    #[error(
        "quadrature did not reach tolerance within {cells} cells (best estimate {best}, error {error})"
    )]
    Convergence { best: f64, error: f64, cells: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("monte-carlo sample {index}: {source}")]
    McSample { index: u64, source: Box<Error> },

    #[error("invalid {kind} spec `{input}`: {reason}")]
    Spec {
        kind: &'static str,
        input: String,
        reason: String,
    },

    #[error("{subject} failed validation: {report}")]
    Validation { subject: &'static str, report: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code class used by the command line front end.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }

    pub fn is_argument(&self) -> bool {
        matches!(
            self,
            Error::Spec { .. }
                | Error::Domain(_)
                | Error::OutOfRange(_)
                | Error::Precondition(_)
                | Error::Validation { .. }
                | Error::InvalidBasis(_)
        )
    }
}
