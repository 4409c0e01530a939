use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("document `{id}` has unknown label `{label}`")]
    UnknownLabel { id: String, label: String },
    #[error("document with empty id")]
    EmptyId,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document `{0}` has no label")]
    UnlabeledDocument(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("class {0} has an empty keyword set")]
    EmptyKeywordSet(usize),
    #[error("document `{0}` is empty after preprocessing")]
    EmptyDocument(String),
    #[error("vocabulary is empty after min_count filtering")]
    EmptyVocabulary,
    #[error("empty token sequence")]
    EmptySequence,
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("target vector is not one-hot")]
    NotOneHot,
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidRate(f64),
    #[error("backward pass needs a cache recorded in train mode")]
    ModeMismatch,
    #[error("model has not been fitted")]
    NotFitted,
    #[error("no feature vectors supplied")]
    EmptyFeatures,
    #[error("label {label} outside the {classes}-class label set")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("total support is zero")]
    ZeroSupport,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("array `{array}` truncated: expected {expected} bytes, found {found}")]
    Truncated {
        array: String,
        expected: usize,
        found: usize,
    },
    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("model file holds a `{found}` model, expected `{expected}`")]
    WrongKind { expected: String, found: String },
    #[error("{0} trailing bytes after the last array")]
    TrailingBytes(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            got,
        }
    }
}
