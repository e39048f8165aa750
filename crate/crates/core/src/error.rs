use core::fmt;

/// Errors raised by the grid, fibering, solver and verification routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Grid dimensions or cell size are unusable.
    InvalidDomain(&'static str),
    /// A field was built with the wrong number of values.
    FieldLength {
        /// Cells in the domain.
        expected: usize,
        /// Values supplied.
        found: usize,
    },
    /// A field value is NaN or infinite.
    NonFinite {
        /// Flat cell index of the offending value.
        cell: usize,
    },
    /// Two fields live on different grids.
    DomainMismatch,
    /// A scalar argument is outside its admissible range.
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// The direction of a ray is identically zero.
    ZeroDirection,
    /// No amplitude with a positive ray derivative was found.
    BracketFailureLow {
        /// Smallest amplitude probed.
        t_min: f64,
    },
    /// The ray derivative stayed positive up to the largest amplitude probed.
    BracketFailureHigh {
        /// Largest amplitude probed.
        t_max: f64,
    },
    /// The nonlinearity failed one of its hypothesis audits.
    AuditFailed,
    /// Every restart of the ground-state search failed.
    AllRestartsFailed {
        /// Restarts attempted.
        restarts: usize,
    },
    /// The nonlinearity has no derivative evaluator.
    MissingDerivative,
    /// The operation is not defined for the requested functional.
    UnsupportedFunctional(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            Error::FieldLength { expected, found } => {
                write!(f, "field has {found} values, domain has {expected} cells")
            }
            Error::NonFinite { cell } => write!(f, "non-finite value in cell {cell}"),
            Error::DomainMismatch => write!(f, "fields are defined on different domains"),
            Error::InvalidParameter { name, value } => {
                write!(f, "parameter `{name}` out of range: {value}")
            }
            Error::ZeroDirection => write!(f, "direction is identically zero"),
            Error::BracketFailureLow { t_min } => write!(
                f,
                "ray derivative never positive near zero (smallest amplitude probed {t_min:e})"
            ),
            Error::BracketFailureHigh { t_max } => write!(
                f,
                "ray derivative still positive at amplitude {t_max:e}; superlinearity fails"
            ),
            Error::AuditFailed => write!(f, "nonlinearity failed its hypothesis audit"),
            Error::AllRestartsFailed { restarts } => {
                write!(f, "all {restarts} restarts failed to bracket a Nehari root")
            }
            Error::MissingDerivative => write!(f, "nonlinearity has no derivative evaluator"),
            Error::UnsupportedFunctional(msg) => write!(f, "unsupported functional: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
