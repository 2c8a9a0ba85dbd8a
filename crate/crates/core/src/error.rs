use thiserror::Error;

/// Errors raised by the phase pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input breaks a structural convention (e.g. a matrix that should be Hermitian is not).
    #[error("convention violated: {0}")]
    Convention(String),

    #[error("numeric failure in {what}{}", at_time(*.t))]
    Numeric { what: String, t: Option<f64> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("time {t} outside [{t0}, {t_end}]")]
    Range { t: f64, t0: f64, t_end: f64 },

    #[error("degenerate spectrum: {0}")]
    Degeneracy(String),

    #[error(
        "norm drift {drift:.3e} exceeds {limit:.0e}; refine the time step (n_steps = {n_steps})"
    )]
    Resolution {
        drift: f64,
        limit: f64,
        n_steps: usize,
    },

    #[error("every channel is below the resolution threshold {threshold:.1e}")]
    EmptySupport { threshold: f64 },

    #[error("states are orthogonal (overlap magnitude {magnitude:.3e}); total phase undefined")]
    OrthogonalStates { magnitude: f64 },

    #[error("channel {channel} is masked at t = {t} but carries weight {weight:.3e}")]
    FactorizationInvalid { channel: usize, t: f64, weight: f64 },

    #[error("singular channel at t = {t}: theta = {theta:.3e} is too close to 0 or pi")]
    SingularChannel { t: f64, theta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("run spec: {0}")]
    Parse(String),
}

fn at_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn numeric(what: impl Into<String>, t: Option<f64>) -> Self {
        Error::Numeric {
            what: what.into(),
            t,
        }
    }

    /// Process exit status for the command-line front end:
    /// 1 for validation problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convention(_)
            | Error::Shape(_)
            | Error::Validation(_)
            | Error::Range { .. }
            | Error::Degeneracy(_)
            | Error::Io(_)
            | Error::Parse(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
