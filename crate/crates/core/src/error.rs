use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: argument `{arg}` must be positive")]
    ZeroArgument { op: &'static str, arg: &'static str },

    #[error("{op}: expected coprime arguments, got gcd({a}, {q}) = {gcd}")]
    NotCoprime {
        op: &'static str,
        a: i64,
        q: u64,
        gcd: u64,
    },

    #[error("{op}: requires {requirement}")]
    Precondition {
        op: &'static str,
        requirement: String,
    },

    #[error("{op}: alpha = {alpha} lies on the minor arcs")]
    MinorArc { op: &'static str, alpha: f64 },

    #[error("alpha = {0} lies outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("modulus {0} is not squarefree")]
    NotSquarefree(u64),

    #[error("density must lie in (0, 1], got {0}")]
    InvalidDensity(f64),

    #[error("set is empty")]
    EmptySet,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
