use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("x = {x} is not a grid node")]
    OffGridQuery { x: f64 },

    #[error("no derivative oracle available for this function")]
    NoDerivativeOracle,

    #[error("derivative undefined at x = {x}")]
    UndefinedAt { x: f64 },

    #[error("no sample satisfies the region constraints after {attempts} attempts")]
    EmptyRegion { attempts: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("function has no finite value")]
    AllInfinite,

    #[error("node {index} is a grid endpoint")]
    BoundaryNode { index: usize },

    #[error("no sampled pair passes the prox-regularity gates")]
    NoAdmissiblePairs,

    #[error("exponent {gamma} outside the admissible range {range}")]
    ExponentOutOfRange { gamma: f64, range: &'static str },

    #[error("rho * mu = {product} must be below 2")]
    ConstantTooLarge { product: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("node {node} is not covered by any half-radius ball")]
    CoverIncomplete { node: f64 },

    #[error("function is not constant on the set: {0}")]
    NonConstantOnSet(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("`{0}` has no disputed envelope formula to audit")]
    NothingToAudit(String),

    #[error("degenerate regression: regressor has no spread")]
    DegenerateFit,

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Stable module-qualified identifier, used in CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OffGridQuery { .. } => "fnmodel.OffGridQuery",
            Error::NoDerivativeOracle => "fnmodel.NoDerivativeOracle",
            Error::UndefinedAt { .. } => "fnmodel.UndefinedAt",
            Error::EmptyRegion { .. } => "fnmodel.EmptyRegion",
            Error::InvalidGrid(_) => "fnmodel.InvalidGrid",
            Error::AllInfinite => "envelope.AllInfinite",
            Error::BoundaryNode { .. } => "varanalysis.BoundaryNode",
            Error::NoAdmissiblePairs => "varanalysis.NoAdmissiblePairs",
            Error::ExponentOutOfRange { .. } => "calculus.ExponentOutOfRange",
            Error::ConstantTooLarge { .. } => "calculus.ConstantTooLarge",
            Error::HypothesisViolated(_) => "calculus.HypothesisViolated",
            Error::CoverIncomplete { .. } => "calculus.CoverIncomplete",
            Error::NonConstantOnSet(_) => "calculus.NonConstantOnSet",
            Error::UnknownEntry(_) => "catalog.UnknownEntry",
            Error::NothingToAudit(_) => "catalog.NothingToAudit",
            Error::DegenerateFit => "certify.DegenerateFit",
            Error::InvalidCertificate(_) => "certify.InvalidCertificate",
            Error::InvalidArgument(_) => "cli.InvalidArgument",
            Error::Io(_) => "cli.Io",
            Error::Parse(_) => "cli.Parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
