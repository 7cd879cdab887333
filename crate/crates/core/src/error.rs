use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the admissible domain (nonpositive weight, bad exponent, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Objects that must share a mesh or a shape do not.
    #[error("structural error: {0}")]
    Structural(String),
    /// A documented precondition failed; `cube` names the offending cube when there is one.
    #[error("precondition violated{}: {message}", cube.as_ref().map(|c| format!(" at cube {c}")).unwrap_or_default())]
    Precondition { cube: Option<String>, message: String },
    /// A numerical procedure could not produce a trustworthy answer.
    #[error("diagnostic: {0}")]
    Diagnostic(String),
    /// A quantity in an asserted position is not certified.
    #[error("certification error: {0}")]
    Certification(String),
    /// Configuration could not be parsed or validated.
    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structural(msg.into()))
}
