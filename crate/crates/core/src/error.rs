use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point set is empty")]
    EmptySet,

    #[error("distance {d_3d} m is shorter than the drone altitude {h_d} m")]
    BelowAltitude { d_3d: f64, h_d: f64 },

    #[error("quadrature did not converge ({context}): estimate {estimate:e}, error {error:e}")]
    Quadrature { context: String, estimate: f64, error: f64 },

    #[error(
        "infeasible power problem: ISR power cap {cap_w:e} W is below the minimum power {p_min_w:e} W"
    )]
    Infeasible { cap_w: f64, p_min_w: f64 },

    #[error("{what} did not converge within {limit} iterations; trace {trace:?}")]
    IterationLimit { what: &'static str, limit: usize, trace: Vec<f64> },

    #[error("no base station sampled in the window after resampling")]
    NoBaseStations,

    #[error("closed form requires {0}")]
    ClosedFormPrecondition(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
