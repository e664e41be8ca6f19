use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WptError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mixing angle undefined: coupling and detuning are both zero")]
    UndefinedAngle,

    #[error("singular schedule at t = {t:e} s: Δ² + 4κ² = 0")]
    SingularSchedule { t: f64 },

    #[error("time {t:e} s outside the schedule window [0, {window:e}] s")]
    OutOfWindow { t: f64, window: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {t:e} s (h = {h:e} s); problem too stiff for the configured tolerances")]
    Stiffness { t: f64, h: f64 },

    #[error("integrator accuracy lost at t = {t:e} s: {what}")]
    IntegratorAccuracy { t: f64, what: String },

    #[error("efficiency undefined: total dissipated power is zero")]
    UndefinedEfficiency,

    #[error("distance {d} m outside the model domain")]
    Domain { d: f64 },

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = WptError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WptError {
    WptError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
