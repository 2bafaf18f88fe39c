//! Unified error type with one process exit code per class.

use thiserror::Error;

/// Errors raised by the library. Every variant maps to a distinct nonzero
/// process exit code so scripted callers can branch on the failure class.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration or input: bad JSON, unknown keys,
    /// missing/contradictory parameters, nonpositive tolerances.
    #[error("config error: {0}")]
    Config(String),

    /// Chain data violates a structural invariant needed by the requested
    /// operation (row sums, entry ranges, missing coefficients).
    #[error("chain validation error: {0}")]
    Validation(String),

    /// A factorization admissibility bound fails; the message names the
    /// violated inequality.
    #[error("admissibility bound violated: {0}")]
    BoundViolation(String),

    /// A computed factor or coefficient left [0, 1] beyond the clamping
    /// margin; `index` locates the offending sequence element.
    #[error("stochasticity violated at index {index}: {what} = {value:.17e}")]
    Stochasticity {
        index: i64,
        what: String,
        value: f64,
    },

    /// A recursion hit a division by a value below the guard threshold;
    /// `index` locates the step.
    #[error("singular recursion at index {index}: {what}")]
    SingularRecursion { index: i64, what: &'static str },

    /// A continued fraction failed to stabilize within the iteration cap.
    /// Carries the last few convergents for diagnosis.
    #[error("continued fraction did not converge after {iterations} iterations; last convergents: {last:?}")]
    NonConvergence { iterations: usize, last: Vec<f64> },

    /// The chain does not satisfy the compatibility conditions required by
    /// the unique (absorbing first) factorization.
    #[error("factorization compatibility failed: {0}")]
    Incompatible(String),

    /// A degenerate configuration on which the requested operation is
    /// undefined (for example a vanishing diagonal or boundary coefficient).
    #[error("degenerate chain: {0}")]
    Degenerate(String),

    /// A requested moment does not exist for the measure (for example an
    /// inverse moment when the support reaches zero or an atom sits at zero).
    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    /// A 2x2 transform matrix is numerically singular (|det| below guard).
    #[error("singular transform: {0}")]
    SingularTransform(String),

    /// A measure descriptor is internally inconsistent (for example a
    /// denominator zero strictly inside the open support interval).
    #[error("measure inconsistency: {0}")]
    MeasureInconsistency(String),

    /// Filesystem or stream failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class. Code 1 is reserved for
    /// verification-threshold breaches reported by the `verify` command.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Validation(_) => 3,
            Error::BoundViolation(_) => 4,
            Error::Stochasticity { .. } => 5,
            Error::SingularRecursion { .. } => 6,
            Error::NonConvergence { .. } => 7,
            Error::Incompatible(_) => 8,
            Error::Degenerate(_) => 9,
            Error::UndefinedMoment(_) => 10,
            Error::SingularTransform(_) => 11,
            Error::MeasureInconsistency(_) => 12,
            Error::Io(_) => 13,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
