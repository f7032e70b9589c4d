use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid circuit or parameter specification.
    #[error("specification error: {0}")]
    Spec(String),
    /// Malformed input data (files, matrices, field exports).
    #[error("format error: {0}")]
    Format(String),
    #[error("numerical error: {0}")]
    Numerics(String),
    /// The model is unphysical, e.g. an overcoupled circuit with a negative eigenvalue.
    #[error("physics error: {0}")]
    Physics(String),
    /// Participation data violating orthonormality beyond tolerance.
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("search error: {0}")]
    Search(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("oracle error: {0}")]
    Oracle(String),
}

impl Error {
    /// Process exit code for this error class: 1 validation, 2 numerical/consistency, 3 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_) | Error::Format(_) => 1,
            Error::Resource(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Spec(_) => "SpecError",
            Error::Format(_) => "FormatError",
            Error::Numerics(_) => "NumericsError",
            Error::Physics(_) => "PhysicsError",
            Error::Consistency(_) => "ConsistencyError",
            Error::Unsupported(_) => "UnsupportedError",
            Error::Search(_) => "SearchError",
            Error::Resource(_) => "ResourceError",
            Error::Oracle(_) => "OracleError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
