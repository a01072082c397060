use std::fmt;

use thiserror::Error;

use crate::sdr::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

/// Which family of constraints made an assignment problem infeasible.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// A user cannot reach its rate threshold even with every subcarrier at the
    /// highest modulation order.
    Rate { user: usize },
    /// The subcarrier budget cannot cover every user's minimum demand.
    Subcarriers { needed: usize, available: usize },
    /// No ABS sees the user with the required LoS probability.
    LineOfSight { user: usize },
    /// A user has no admissible ABS (all links excluded).
    Association { user: usize },
    /// Exhaustive enumeration found no feasible point.
    Exhausted,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::Rate { user } => write!(f, "rate threshold of user {user} is unreachable"),
            Infeasibility::Subcarriers { needed, available } => {
                write!(f, "users need at least {needed} subcarriers, only {available} available")
            }
            Infeasibility::LineOfSight { user } => {
                write!(f, "user {user} has no ABS within its LoS coverage cone")
            }
            Infeasibility::Association { user } => write!(f, "user {user} has no admissible ABS"),
            Infeasibility::Exhausted => write!(f, "no feasible assignment exists"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("modulation order {m} unusable: Q^-1 argument {arg:e} must lie below 0.5")]
    ModulationOrder { m: u32, arg: f64 },

    #[error("assignment serves no user, placement subproblem is undefined")]
    EmptyCoverage,

    #[error("ABS {abs} needs altitude {required:.3} m, above the {max:.3} m ceiling")]
    Irreparable { abs: usize, required: f64, max: f64 },

    #[error("all {samples} randomized candidates were irreparable")]
    RandomizationFailed { samples: usize },

    #[error("SDP solver stopped with status {0:?}")]
    Sdp(SdpStatus),

    #[error("monomial fit rejected: max log residual {residual:.4} over [{lo}, {hi}]")]
    FitRejected { residual: f64, lo: f64, hi: f64 },

    #[error("geometric program: {0}")]
    Gp(String),

    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("search space of {size:e} points exceeds the guard of {limit:e}")]
    TooLarge { size: f64, limit: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
