use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParams { field: &'static str, message: String },

    #[error("quadrature did not reach the requested tolerance (requested {requested:.2e}, achieved {achieved:.2e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("kernel is not pointwise integrable on the diagonal for alpha >= N-1 (alpha = {alpha}, N = {dim}); use the cell-averaged matrix assembly")]
    DivergentKernel { alpha: f64, dim: u32 },

    #[error("solver did not converge within {iterations} iterations (residual {residual:.3e}, level {level:.6e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        level: f64,
    },

    #[error("path maximum collapsed to an endpoint (index {index})")]
    DegeneratePath { index: usize },

    #[error("mountain-pass geometry not certified: {0}")]
    NoMountainPassGeometry(String),

    #[error("regime not covered by the existence classification: {0}")]
    UncoveredRegime(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
