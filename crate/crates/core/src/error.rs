use std::path::PathBuf;

/// Errors raised by the styloforge pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no authors found under {0}")]
    NoAuthors(PathBuf),

    #[error("author {author} has {found} documents, at least {required} required")]
    TooFewDocuments {
        author: String,
        found: usize,
        required: usize,
    },

    #[error("sentence pool of {author} too small: {required} words required, {available} available")]
    PoolTooSmall {
        author: String,
        required: usize,
        available: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("context {0:?} never observed during fitting")]
    UnseenContext(Vec<u32>),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("requested {requested} components but only {achievable} are achievable")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("author rosters differ; missing authors: {0:?}")]
    RosterMismatch(Vec<String>),

    #[error("unknown author label {0}")]
    UnknownAuthor(String),

    #[error("at least two classes required, found {0}")]
    SingleClass(usize),

    #[error("train and test sets overlap in {0} documents")]
    Leakage(usize),

    #[error("generation for {author} stalled after {rejections} consecutive rejections (accepted {accepted} sentences)")]
    GenerationStalled {
        author: String,
        rejections: usize,
        accepted: usize,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("missing {what} at {path}; run `{stage}` first")]
    MissingArtifact {
        what: String,
        path: PathBuf,
        stage: &'static str,
    },

    #[error("malformed input in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
