use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown dataset schema `{0}`")]
    UnknownSchema(String),

    #[error("header does not match schema `{schema}`: {detail}")]
    HeaderMismatch { schema: String, detail: String },

    #[error("malformed data row {row}: {detail}")]
    MalformedRow { row: usize, detail: String },

    #[error("invalid split spec: {0}")]
    InvalidSplit(String),

    #[error("not enough {what}: need {needed}, have {available}")]
    Insufficient {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("labels required: {0}")]
    MissingLabels(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("backward called before a forward pass was recorded")]
    NoForwardPass,

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },

    #[error("n_components {requested} exceeds the rank {rank} of the training correlation matrix")]
    RankDeficient { requested: usize, rank: usize },

    #[error("k-means left cluster {0} empty after re-seeding")]
    EmptyCluster(usize),

    #[error("invalid detector parameter: {0}")]
    InvalidParameter(String),

    #[error("grid is empty")]
    EmptyGrid,

    #[error("artifact: {0}")]
    Artifact(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
