//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised when a precondition of an operation is violated or an
/// input cannot be interpreted.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure with no positive mass was supplied where a non-trivial one is required.
    #[error("empty measure")]
    EmptyMeasure,

    /// A point set with no points was supplied.
    #[error("empty point set")]
    EmptySet,

    /// Dimension parameter outside `(0, 2]`.
    #[error("invalid alpha {0}: expected a value in (0, 2]")]
    InvalidAlpha(f64),

    /// A scale was not of the required dyadic form.
    #[error("invalid scale {value}: {reason}")]
    InvalidScale { value: f64, reason: String },

    /// Generic parameter validation failure.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A geometric object does not fit inside the grid it is rasterized on.
    #[error("out of extent: {0}")]
    OutOfExtent(String),

    /// An annulus whose thickness is not smaller than its radius.
    #[error("degenerate annulus: thickness {thickness} is not below radius {radius}")]
    DegenerateAnnulus { radius: f64, thickness: f64 },

    /// A separation or diameter precondition of the incidence experiment failed.
    #[error("separation: {0}")]
    Separation(String),

    /// Slicing was requested for a set of dimension at most one.
    #[error("slicing requires α>1 (got α={0})")]
    SlicingAlpha(f64),

    /// A nonnegative input contained a negative entry.
    #[error("negative value {0} where a nonnegative input is required")]
    Negative(f64),

    /// An operation-specific precondition failed.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Parameters fall outside the range covered by the estimate being tested.
    #[error("parameters out of range: {0}")]
    OutOfRange(String),

    /// Text input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A failure inside one point of a multi-scale sweep.
    #[error("at δ = {delta}: {source}")]
    AtScale {
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
