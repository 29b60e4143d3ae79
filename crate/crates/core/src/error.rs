use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain an operation accepts.
    InvalidArgument {
        name: &'static str,
        reason: &'static str,
    },
    /// An iterative solver stopped before meeting its tolerance.
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// A transverse mode has a non-positive squared frequency: the linear
    /// chain is not stable and would buckle into a zigzag.
    ZigzagInstability { mode: usize, omega_squared: f64 },
    /// A simulation would exceed the fixed size budget for exact methods.
    ResourceBudget {
        what: &'static str,
        required: usize,
        limit: usize,
    },
    /// A state drifted outside its physical invariants during integration.
    Integration {
        invariant: &'static str,
        deviation: f64,
        step: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidArgument { name, reason }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument { .. } | Error::ResourceBudget { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument { name, reason } => {
                write!(f, "invalid argument `{name}`: {reason}")
            }
            Error::NoConvergence {
                solver,
                iterations,
                residual,
            } => write!(
                f,
                "{solver} did not converge after {iterations} iterations (worst residual {residual:e})"
            ),
            Error::ZigzagInstability {
                mode,
                omega_squared,
            } => write!(
                f,
                "zigzag instability: transverse mode {mode} has squared frequency {omega_squared:e} rad^2/s^2"
            ),
            Error::ResourceBudget {
                what,
                required,
                limit,
            } => write!(f, "{what} needs {required}, budget is {limit}"),
            Error::Integration {
                invariant,
                deviation,
                step,
            } => write!(
                f,
                "integration violated {invariant} by {deviation:e} with step {step:e} s; reduce the step size"
            ),
        }
    }
}

impl core::error::Error for Error {}
