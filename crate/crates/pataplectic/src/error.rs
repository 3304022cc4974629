use crate::expr::ParseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("chart mismatch: dimension {left} vs {right}")]
    ChartMismatch { left: usize, right: usize },
    #[error("degree error: {0}")]
    Degree(String),
    #[error("cannot parse {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("form is not pataplectic: {0}")]
    NotPataplectic(String),
    #[error("pataplectic vector field is not unique: {0}")]
    Degenerate(String),
    #[error("form is not admissible: {0}")]
    NotAdmissible(String),
    #[error("singular Hessian of the Legendre generator (condition number {cond:.3e})")]
    SingularHessian { cond: f64 },
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("point outside the Legendre domain: {0}")]
    Domain(String),
    #[error("blow-up at node {node:?}: |value| = {value:.3e}")]
    BlowUp { node: Vec<usize>, value: f64 },
    #[error("non-hyperbolic initial data: {0}")]
    NonHyperbolicInit(String),
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(field: impl Into<String>, source: ParseError) -> Self {
        Error::Parse {
            field: field.into(),
            source,
        }
    }
}
