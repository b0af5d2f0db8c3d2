use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("wrong mode count: expected {expected}, got {actual}")]
    WrongModeCount { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("thermal term diverges: n_th = {n_th:e} but dn_th/dB = {d_nth:e}")]
    SingularPureState { n_th: f64, d_nth: f64 },

    #[error("classical Fisher information is only defined here for zero displacement")]
    DisplacementNotSupported,

    #[error("finite-difference estimates of {quantity} disagree (h: {coarse:e}, h/2: {fine:e})")]
    StepTooSmall {
        quantity: &'static str,
        coarse: f64,
        fine: f64,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operation requires a noiseless model (kappa = {kappa})")]
    UnsupportedNoise { kappa: f64 },

    #[error("coupling g must be positive")]
    ZeroCoupling,

    #[error("g = {g} is not below the critical coupling g_c = {g_c}")]
    SuperradiantPhase { g: f64, g_c: f64 },

    #[error("Fock cutoff {cutoff} too small: tail population {tail:e} >= {tolerance:e}")]
    CutoffTooSmall {
        cutoff: usize,
        tail: f64,
        tolerance: f64,
    },

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("log-log fit needs strictly positive data (point {index}: x = {x}, y = {y})")]
    NonPositiveData { index: usize, x: f64, y: f64 },

    #[error("log-log fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("function is flat on the search window")]
    FlatFunction,
}

pub type Result<T> = std::result::Result<T, Error>;
