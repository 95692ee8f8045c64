use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid nerve: {0}")]
    Nerve(String),
    #[error("invalid word: {0}")]
    Word(String),
    #[error("limit exceeded: {0}")]
    Limit(String),
    #[error("invalid Cartan matrix: {0}")]
    Cartan(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
