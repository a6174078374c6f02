use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate metric at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("point {point:?} lies outside the chart domain: {reason}")]
    OutsideChart { point: Vec<f64>, reason: String },

    #[error("node {node:?} is within {rho:e} of the puncture (minimum {rho_min:e})")]
    PunctureProximity {
        node: Option<(usize, usize)>,
        rho: f64,
        rho_min: f64,
    },

    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: String, reason: String },

    #[error("incompatible homotopy class: {0}")]
    IncompatibleHomotopy(String),

    #[error("antipodal values at node {node:?}; normalized interpolation is undefined")]
    AntipodalPair { node: Option<(usize, usize)> },

    #[error("non-finite value at node {node:?}")]
    NonFinite { node: (usize, usize) },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("frame velocity is not tangent to the Stiefel manifold (defect {defect:e})")]
    NotTangent { defect: f64 },

    #[error("field file: {0}")]
    FieldFormat(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Attach a grid node to errors raised by pointwise geometry evaluation.
    pub fn at_node(self, node: (usize, usize)) -> Self {
        match self {
            Error::PunctureProximity { rho, rho_min, .. } => Error::PunctureProximity {
                node: Some(node),
                rho,
                rho_min,
            },
            Error::AntipodalPair { .. } => Error::AntipodalPair { node: Some(node) },
            other => other,
        }
    }
}
