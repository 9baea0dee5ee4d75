use thiserror::Error;

use crate::phase_solver::PartialSeries;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("jet order {order} exceeds the configured cap {cap}")]
    JetOrderTooLarge { order: usize, cap: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("degenerate leg {leg}: consecutive points are {distance:e} apart")]
    DegenerateLeg { leg: usize, distance: f64 },

    #[error("orbit search did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    OrbitNotConverged { iterations: usize, gradient_norm: f64 },

    #[error("Hessian at the orbit is degenerate (smallest eigenvalue {min_eigenvalue:e}); orbit is not isolated")]
    DegenerateHessian { min_eigenvalue: f64 },

    #[error("first-order phase coefficients inconsistent on obstacle {obstacle}: -f(2,1) = {from_outgoing:e}, f(1,2) of previous leg = {from_incoming:e}")]
    InconsistentFirstOrder {
        obstacle: usize,
        from_outgoing: f64,
        from_incoming: f64,
    },

    #[error("second-order Newton solve did not converge in {iterations} steps (residual {residual:e})")]
    SecondOrderNotConverged { iterations: usize, residual: f64 },

    #[error("second-order root rejected on obstacle {obstacle} (a11 = {a11}, c2 = {c2}): {reason}")]
    BranchRejected {
        obstacle: usize,
        a11: f64,
        c2: f64,
        reason: String,
    },

    #[error("linear system for order {order} is singular (condition estimate {condition:e})")]
    SingularSystem { order: usize, condition: f64 },

    #[error("order {order} residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { order: usize, residual: f64 },

    #[error("phase series failed at order {order}: {source}")]
    PhaseSeriesFailed {
        order: usize,
        partial: Box<PartialSeries>,
        #[source]
        source: Box<Error>,
    },

    #[error("Newton solve for chi did not converge (residual {residual:e} after {iterations} iterations)")]
    ChiNotConverged { iterations: usize, residual: f64 },

    #[error("iterated reflection map does not contract at tau = {tau}")]
    NotContracting { tau: f64 },

    #[error("tau = {tau} lies outside the image of chi on the solved grid")]
    OutsideChiImage { tau: f64 },

    #[error("Hankel function argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("diagonal block {block} is numerically singular (condition estimate {condition:e}); wavenumber may be resonant")]
    SingularBlock { block: usize, condition: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last change {change:e})")]
    EigenNotConverged { iterations: usize, change: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("report manifests do not match: {0}")]
    ManifestMismatch(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line tool: 2 for invalid
    /// input, 4 for I/O, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidCurve(_) | Error::InvalidScene(_) | Error::ManifestMismatch(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
            _ => 3,
        }
    }
}
