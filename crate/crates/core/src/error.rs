use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("{function}: argument {value} outside domain {domain}")]
    Domain { function: &'static str, value: f64, domain: &'static str },

    /// Function evaluated exactly at a singular point.
    #[error("{function}: singular at {value}")]
    Singularity { function: &'static str, value: f64 },

    #[error("{function}: result overflows at argument {value}")]
    Overflow { function: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("tail model `{0}` is not integrable against the requested weight")]
    NonIntegrableTail(&'static str),

    #[error("quadrature tolerance not met: estimate {estimate}, error {error}, requested {requested}")]
    ToleranceNotMet { estimate: f64, error: f64, requested: f64 },

    /// Evaluation point too close to a grid edge for the stencil in use.
    #[error("radius {r} too close to the grid boundary [{r_min}, {r_max}]")]
    Boundary { r: f64, r_min: f64, r_max: f64 },

    #[error("non-positive value {value} at radius {r}")]
    Positivity { r: f64, value: f64 },

    #[error("radial functions are sampled on different grids")]
    GridMismatch,

    #[error("no closed form available for potential kind `{0}`")]
    UnsupportedKind(&'static str),

    #[error("invalid potential: {0}")]
    InvalidSpec(String),

    #[error("singular linear system in {0}")]
    SingularMatrix(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
