use thiserror::Error;

/// Errors shared by all engine modules.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("ill-defined product: {0}")]
    IllDefinedProduct(String),
    #[error("terms carry different mass dimensions: {0} vs {1}")]
    InhomogeneousDimension(String, String),
    #[error("no annihilator (E{mass_part} + {degree})^N with N <= {n_max} found", mass_part = if *.with_mass { " - m d/dm" } else { "" })]
    NotAlmostHomogeneous {
        degree: String,
        with_mass: bool,
        n_max: u32,
    },
    #[error("free-index derivative outside the invariant calculus: {0}")]
    UnsupportedDerivative(String),
    #[error("scaling degree {sd} >= ambient dimension {k}: no direct extension")]
    DivergentDirect { sd: String, k: u32 },
    #[error("input is not X^(-a) times a log-polynomial with integer a >= 2: {0}")]
    UnsupportedForm(String),
    #[error("moment system singular at eta = {eta}: root of {factor}")]
    ResonantDegree { eta: String, factor: String },
    #[error("requested order {requested} exceeds computed truncation {truncation}")]
    TruncationTooSmall { requested: i64, truncation: i64 },
    #[error("regularized dimension must be even and > 2, got d = {0}")]
    OddDimension(u32),
    #[error("degenerate regulators: {0} and {1} scale identically")]
    DegenerateRegulators(String, String),
    #[error("integrand has scaling degree {sd} >= k = {k} at the origin and no extension marker")]
    NonIntegrable { sd: String, k: u32 },
    #[error("pairing geometry not supported: {0}")]
    UnsupportedGeometry(String),
    #[error("limit increments do not contract: {0}")]
    NoConvergence(String),
    #[error("mass limit grows: log power guess {p} lies below the true power")]
    DivergentLimit { p: u32 },
    #[error("scaling fit failed: {0}")]
    FitFailure(String),
    #[error("operation not defined on this node: {0}")]
    UnsupportedOperation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
