use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Each variant carries enough context to be surfaced by the CLI with a
/// module-qualified code (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("square root branch is ambiguous for non-negative real argument {0}")]
    AmbiguousBranch(f64),
    #[error("jet has a vanishing constant term")]
    ZeroConstantTerm,
    #[error("cannot differentiate a jet of order 0")]
    OrderUnderflow,
    #[error("matrix is singular (pivot {0:.3e})")]
    Singular(f64),
    #[error("coordinate Jacobian is degenerate at the base point")]
    FocalDegeneracy,
    #[error("spectral parameter has zero imaginary part (lambda = {0})")]
    RealFrequency(f64),
    #[error("spectral parameter must be nonzero")]
    ZeroFrequency,
    #[error("root symbol is degenerate (|rho| = {0:.3e})")]
    DegenerateRho(f64),
    #[error("flattened symbol needs r0 > 0")]
    ZeroFrequencyCovector,
    #[error("input violates tangency constraint: {what} = {value:.3e}")]
    NotTangent { what: &'static str, value: f64 },
    #[error("x1 = {x1} lies outside the retained region (0, {limit}]")]
    OutsideRetainedRegion { x1: f64, limit: f64 },
    #[error("requested order {requested} exceeds the jet budget {budget}")]
    OrderBudgetExceeded { requested: usize, budget: usize },
    #[error("interior resonance: denominator {0:.3e} below threshold")]
    InteriorResonance(f64),
    #[error("contour passes through (or too close to) a zero after refinement")]
    ContourThroughZero,
    #[error("media coincide: eps1*mu1 == eps2*mu2")]
    CoincidentMedia,
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Module-qualified error code used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AmbiguousBranch(_) => "numerics::ambiguous-branch",
            Error::ZeroConstantTerm => "numerics::zero-constant-term",
            Error::OrderUnderflow => "numerics::order-underflow",
            Error::Singular(_) => "numerics::singular",
            Error::FocalDegeneracy => "geometry::focal-degeneracy",
            Error::RealFrequency(_) => "spectral::real-frequency",
            Error::ZeroFrequency => "spectral::zero-frequency",
            Error::DegenerateRho(_) => "crosssys::degenerate-rho",
            Error::ZeroFrequencyCovector => "spectral::zero-frequency-covector",
            Error::NotTangent { .. } => "crosssys::not-tangent",
            Error::OutsideRetainedRegion { .. } => "eikonal::outside-retained-region",
            Error::OrderBudgetExceeded { .. } => "transport::order-budget-exceeded",
            Error::InteriorResonance(_) => "mie::interior-resonance",
            Error::ContourThroughZero => "transmission::contour-through-zero",
            Error::CoincidentMedia => "transmission::coincident-media",
            Error::Config(_) => "cli::config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
