use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("input is not valid UTF-8: {0}")]
    Utf8(#[from] std::string::FromUtf8Error),

    #[error("no content: {0}")]
    NoContent(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("label model has no signal: every labeling function abstained on every candidate")]
    NoSignal,

    #[error("unregistered labeling function `{0}`")]
    UnknownLabelingFunction(String),

    #[error("numerical failure in {0}")]
    Numerical(&'static str),

    #[error("empty gold standard corpus")]
    EmptyGoldCorpus,

    #[error("overlapping spans in {which}: {first} and {second}")]
    OverlappingSpans {
        which: &'static str,
        first: String,
        second: String,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing natural key for {0}")]
    MissingKey(String),

    #[error("invalid IRI `{0}`")]
    InvalidIri(String),

    #[error("N-Triples line {line}: {message}")]
    NTriples { line: usize, message: String },

    #[error("query syntax error at {line}:{column}: {message}")]
    QuerySyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported feature `{feature}` at {line}:{column}")]
    UnsupportedFeature {
        feature: String,
        line: usize,
        column: usize,
    },

    #[error("unbound prefix `{prefix}` at {line}:{column}")]
    UnboundPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("no enrichment data loaded; pass the enrichment file (software metadata TSV) to run this analysis")]
    MissingEnrichment,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

/// Reads a whole file, attaching the path to any io error.
pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
