use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid domain, policy or campaign parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no Whitney cube accepted down to generation {min_generation}")]
    NoCubeAccepted { min_generation: i32 },

    #[error("decomposition is empty")]
    EmptyDecomposition,

    #[error("radius {r} outside the admissible range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("layer S_r is empty for r = {0}")]
    EmptyLayer(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    /// The empirical tail reaches zero inside a fit window.
    #[error("tail is zero at {at} inside window [{lo}, {hi}]; shrink the window")]
    ZeroTail { at: f64, lo: f64, hi: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}
