use thiserror::Error;

/// Errors raised anywhere in the jet pipeline. Serializes as
/// `{"kind": ..., "detail": ...}`.
#[derive(Debug, Clone, Error, PartialEq, serde::Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Error {
    #[error("incompatible jet contexts: {0}")]
    Context(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constant term is zero; {0} is undefined")]
    NonUnit(&'static str),

    #[error("constant term {0} is not the square of a rational; use float mode")]
    NonSquare(String),

    #[error("negative radicand {value} at base point in {what}")]
    NegativeRadicand { what: String, value: f64 },

    #[error("inner jet {index} has nonzero constant term; composition is only defined at the base point")]
    NonzeroInnerConstant { index: usize },

    #[error("jet is not divisible by {divisor} (first obstruction at degree {degree})")]
    NotDivisible { divisor: String, degree: usize },

    #[error("recentering an exact jet whose degree reaches its truncation order loses the tail; pass accept_truncation")]
    RecenterTruncation,

    #[error("characteristic/degenerate at base point: determinant has zero constant term (leading term {leading})")]
    Characteristic { leading: String },

    #[error("at recursion order {order}: {source}")]
    AtOrder {
        order: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient truncation order: have {have}, need {need} for {what}")]
    InsufficientOrder { what: String, have: usize, need: usize },

    #[error("metric is not admissible: {}", .0.join("; "))]
    NotAdmissible(Vec<String>),

    #[error("positivity certificate failed: {0}")]
    Positivity(String),

    #[error("retry budget exhausted for {what} after {attempts} attempts: {last}")]
    RetryExhausted {
        what: String,
        attempts: usize,
        last: Box<Error>,
    },

    #[error("hamiltonian drift {drift:e} exceeds tolerance {tol:e} after {halvings} step halvings")]
    Drift { drift: f64, tol: f64, halvings: usize },

    #[error("point lies outside the trust region (|z| = {norm} > {radius})")]
    OutsideTrustRegion { norm: f64, radius: f64 },

    #[error("invalid symbol: {0}")]
    Symbol(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("schema: {0}")]
    Schema(String),
}

impl Error {
    pub fn at_order(self, order: usize) -> Error {
        Error::AtOrder {
            order,
            source: Box::new(self),
        }
    }

    /// True when this error (or the error it wraps) marks a characteristic base point.
    pub fn is_characteristic(&self) -> bool {
        match self {
            Error::Characteristic { .. } => true,
            Error::AtOrder { source, .. } => source.is_characteristic(),
            Error::RetryExhausted { last, .. } => last.is_characteristic(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
