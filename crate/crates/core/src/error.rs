use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "time step {dt} exceeds the recommended stable step {k_recommended} \
         (linear bound {k_max}); pass --force-dt to run anyway"
    )]
    StepAboveBound { dt: f64, k_recommended: f64, k_max: f64 },

    #[error("solution diverged: non-finite values after step {step}")]
    Diverged { step: u64 },

    #[error(
        "domain too small: {what}; need an extent of at least {min_extent:.4} \
         ({min_points} points at h = {h})"
    )]
    DomainTooSmall { what: String, min_extent: f64, min_points: usize, h: f64 },

    #[error("invalid tile plan: {0}")]
    InvalidTiling(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed frame: {0}")]
    Frame(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    /// True for errors caused by bad user input rather than the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidParameter { .. }
                | Error::StepAboveBound { .. }
                | Error::DomainTooSmall { .. }
                | Error::InvalidTiling(_)
                | Error::Config { .. }
        )
    }
}
