use std::path::PathBuf;

use crate::protocol::ProtocolError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("catalog: {0}")]
    Catalog(String),

    #[error("invalid image: {0}")]
    Image(String),

    #[error("image decode: {0}")]
    Decode(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("config: {0}")]
    Config(String),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
