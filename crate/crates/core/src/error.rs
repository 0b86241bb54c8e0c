use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("action {action:?} left the extended domain (|I - center| <= {limit})")]
    DomainEscape { action: Vec<f64>, limit: f64 },

    #[error("implicit solve did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("contraction precondition violated: estimated sup {estimate:e} >= R/(d+1) = {limit:e}")]
    ContractionViolated { estimate: f64, limit: f64 },

    #[error("n * omega_star is not integral (defect {defect:e})")]
    NotResonant { defect: f64 },

    #[error("interpolation order {m} outside the supported range 1..={max}")]
    OrderTooLarge { m: usize, max: usize },

    #[error("gauss scheme requires an even order, got {0}")]
    OddGaussOrder(usize),

    #[error("map is not invertible in this form")]
    NotInvertible,

    #[error("dirichlet search exhausted all n < {n_max}")]
    SearchExhausted { n_max: usize },

    #[error("newton iteration for the resonant action did not converge (residual {residual:e})")]
    ResonantActionFailed { residual: f64 },

    #[error("iterate {action:?} left the action ball")]
    OutOfDomain { action: Vec<f64> },

    #[error("operation requires a generating-form map")]
    FormMismatch,

    #[error("ode step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("adaptive quadrature failed to reach tolerance {tol:e} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },

    #[error("integration path left the evaluable region: {reason}")]
    PathExit { reason: String },

    #[error("degenerate fit: {usable} usable points, {floored} at the numerical floor")]
    DegenerateFit { usable: usize, floored: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {index} failed: {source}")]
    AtStep { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, index: usize) -> Self {
        match self {
            Error::AtStep { .. } => self,
            other => Error::AtStep { index, source: Box::new(other) },
        }
    }

    /// Strips step-index wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
