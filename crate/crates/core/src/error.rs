use std::fmt;

/// Crate-wide error type.
///
/// `Config` and `Usage` are caller mistakes; the remaining variants are
/// numerical failures surfaced by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration value; carries the offending key.
    Config { key: String, message: String },
    /// A field or face array does not live on the grid it was paired with.
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// An operation was called outside its domain of validity.
    Usage(String),
    /// A field contains NaN or infinite entries.
    NonFinite { context: &'static str, time: f64 },
    /// Newton failed to converge within the iteration budget; the caller may
    /// retry the step with half the time increment.
    NewtonStalled {
        time: f64,
        dt: f64,
        iterations: usize,
        residual: f64,
    },
    /// A time step kept failing after the maximum number of dt halvings.
    StepFailed {
        time: f64,
        dt: f64,
        halvings: usize,
        detail: String,
    },
    /// Requested dt exceeds the advective stability limit.
    CflViolation { dt: f64, dt_stable: f64 },
    /// A solver produced a state violating one of its invariants.
    InvariantViolation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config { key, message } => write!(f, "config error for key `{key}`: {message}"),
            Error::Shape {
                context,
                expected,
                got,
            } => write!(f, "shape error in {context}: expected length {expected}, got {got}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::NonFinite { context, time } => {
                write!(f, "non-finite values in {context} at t = {time}")
            }
            Error::NewtonStalled {
                time,
                dt,
                iterations,
                residual,
            } => write!(
                f,
                "Newton stalled at t = {time}, dt = {dt}: residual {residual:.3e} after {iterations} iterations"
            ),
            Error::StepFailed {
                time,
                dt,
                halvings,
                detail,
            } => write!(
                f,
                "time step failed at t = {time} (dt = {dt}) after {halvings} halvings: {detail}"
            ),
            Error::CflViolation { dt, dt_stable } => {
                write!(f, "CFL violation: dt = {dt} exceeds stable limit {dt_stable}")
            }
            Error::InvariantViolation(msg) => write!(f, "invariant violation: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Usage(_) | Error::Shape { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
