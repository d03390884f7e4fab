use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("state within {dist:.3e} of a primary; unregularized chart is singular there")]
    CollisionSingularity { dist: f64 },

    #[error("inverse stereographic chart undefined at the north pole (xi0 = {xi0})")]
    PoleSingularity { xi0: f64 },

    #[error("mu = {mu} > 0: no exact CR3BP f-extension is configured; use the numeric composition instead")]
    UnsupportedMode { mu: f64 },

    #[error("constraint violation: {what} = {value:.3e} exceeds tolerance {tol:.1e}")]
    ConstraintViolation { what: &'static str, value: f64, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("adaptive step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trajectory within {dist:.3e} of the binding (guard {guard:.1e}); open-book angle undefined")]
    BindingProximity { dist: f64, guard: f64 },

    #[error("no section return before t = {max_time}")]
    HorizonExceeded { max_time: f64 },

    #[error("symplecticity drift {drift:.3e} exceeds bound {bound:.1e}")]
    SymplecticityDrift { drift: f64, bound: f64 },

    #[error("crossing at t = {t} is not regular after {retries} re-sampling attempts")]
    NonRegularCrossing { t: f64, retries: usize },

    #[error("need at least {need} arcs for the definiteness fit, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("action windows {first} and {second} overlap")]
    WindowOverlap { first: usize, second: usize },

    #[error("no action window with index {index}")]
    WindowIndex { index: usize },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
