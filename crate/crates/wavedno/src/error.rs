use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("multiplier is not finite at mode ({mx}, {my})")]
    InvalidMultiplier { mx: i64, my: i64 },

    #[error("zero mode {mean:e} exceeds tolerance {tol:e}")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("strict connectedness violated: min(h + eta) = {min_depth} < h0 = {h0}")]
    StrictConnectednessViolated { min_depth: f64, h0: f64 },

    #[error("delta = {delta} is not below the admissibility bound {bound}")]
    DeltaTooLarge { delta: f64, bound: f64 },

    #[error("Jacobian degenerate: min(1 + d_w sigma) = {min_jac}")]
    DegenerateJacobian { min_jac: f64 },

    #[error("fixed point did not converge after {iterations} iterations (last update {last_update:e})")]
    NonConvergence { iterations: usize, last_update: f64 },

    #[error("operation not supported for the {0} diffeomorphism")]
    UnsupportedDiffeo(&'static str),

    #[error("bottom flux mean {mean:e} exceeds tolerance {tol:e}")]
    BottomFluxNonzero { mean: f64, tol: f64 },

    #[error("strip parameter {delta} outside (0, {upper})")]
    DeltaOutOfRange { delta: f64, upper: f64 },

    #[error("linear solve failed, residual {residual:e}")]
    SolveFailed { residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config: {0}")]
    ConfigError(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
