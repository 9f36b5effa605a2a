use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("{op} is undefined at x = {x}")]
    Domain { op: &'static str, x: f64 },

    #[error("diffusion coefficient is not positive at x = {x} (sigma = {value})")]
    NonPositiveSigma { x: f64, value: f64 },

    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),

    #[error("measure is not normalizable: {0}")]
    NonNormalizable(String),

    #[error("NaN integrand at x = {x}")]
    NanIntegrand { x: f64 },

    #[error("quadrature did not converge: value {value}, error estimate {err}")]
    NotConverged { value: f64, err: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("density underflow at x = {x}; reduce the truncation radius")]
    Underflow { x: f64 },

    #[error("likely explosive: {fraction} of paths crossed the blow-up radius")]
    LikelyExplosive { fraction: f64 },

    #[error("Feynman-Kac weight overflow (log-weight {log_weight}) at path {path}")]
    WeightOverflow { log_weight: f64, path: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}
