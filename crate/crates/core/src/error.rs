use thiserror::Error;

pub type Result<T, E = LavsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LavsError {
    #[error("surface {0:?} contains the reserved delimiter \"@@\"")]
    ReservedDelimiter(String),
    #[error("invalid surface {0:?}: surfaces must be non-empty and free of newlines")]
    InvalidSurface(String),
    #[error("invalid language code {0:?}")]
    InvalidLanguageCode(String),
    #[error("language {0:?} listed twice")]
    DuplicateLanguage(String),
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("duplicate vocabulary entry {0:?}")]
    DuplicateEntry(String),
    #[error("no usage set for shared token {0:?}")]
    MissingUsage(String),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("at least two languages are required, got {0}")]
    TooFewLanguages(usize),
    #[error("budget {budget} cannot be met: at most {max} language-specific entries are realizable")]
    BudgetUnreachable { budget: usize, max: usize },
    #[error("split selection needs a purely shared vocabulary; {0:?} is language-specific")]
    NotShared(String),
    #[error("plan does not match vocabulary: {0}")]
    PlanMismatch(String),
    #[error("no detection records for direction {src}->{tgt}")]
    EmptyDirection { src: String, tgt: String },
    #[error("language {0:?} has no tier assignment")]
    UncoveredLanguage(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("malformed input: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LavsError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            LavsError::ReservedDelimiter(_) => "RESERVED_DELIMITER",
            LavsError::InvalidSurface(_) => "INVALID_SURFACE",
            LavsError::InvalidLanguageCode(_) => "INVALID_LANGUAGE",
            LavsError::DuplicateLanguage(_) => "DUPLICATE_LANGUAGE",
            LavsError::UnknownLanguage(_) => "UNKNOWN_LANGUAGE",
            LavsError::DuplicateEntry(_) => "DUPLICATE_ENTRY",
            LavsError::MissingUsage(_) => "MISSING_USAGE",
            LavsError::UnknownToken(_) => "UNKNOWN_TOKEN",
            LavsError::MalformedLine { .. } => "MALFORMED_LINE",
            LavsError::SizeMismatch { .. } => "SIZE_MISMATCH",
            LavsError::Domain(_) => "DOMAIN",
            LavsError::TooFewLanguages(_) => "TOO_FEW_LANGUAGES",
            LavsError::BudgetUnreachable { .. } => "BUDGET_UNREACHABLE",
            LavsError::NotShared(_) => "NOT_SHARED",
            LavsError::PlanMismatch(_) => "PLAN_MISMATCH",
            LavsError::EmptyDirection { .. } => "EMPTY_DIRECTION",
            LavsError::UncoveredLanguage(_) => "UNCOVERED_LANGUAGE",
            LavsError::DegenerateVariance(_) => "DEGENERATE_VARIANCE",
            LavsError::ConfigInvalid(_) => "CONFIG_INVALID",
            LavsError::Json(_) => "MALFORMED_INPUT",
            LavsError::Io(_) => "IO_ERROR",
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LavsError::SizeMismatch { expected, found })
    }
}
