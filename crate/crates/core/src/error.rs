use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("link `{link}` references missing node `{missing}`")]
    DanglingEndpoint { link: String, missing: String },
    #[error("link `{link}` needs at least two endpoints, found {found}")]
    TooFewEndpoints { link: String, found: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("problem failed validation:\n{0}")]
    Validation(String),
    #[error("load priority factor c = {c} is below the sum of load weights {sum}")]
    LoadFactor { c: f64, sum: f64 },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model has no variables")]
    EmptyModel,
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("relaxation is unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("external solver failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Errors from reading or writing LP/MPS models and solution listings.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("names collide after sanitization: {}", .0.join(", "))]
    NameCollision(Vec<String>),
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("request `{0}` is already committed")]
    AlreadyCommitted(String),
    #[error("request `{0}` is not committed")]
    UnknownRequest(String),
    #[error("embedding does not fit the current state:\n{0}")]
    Refused(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Error)]
pub enum DocError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
