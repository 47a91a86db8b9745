use std::path::PathBuf;

use thiserror::Error;

use crate::segmentation::RegionId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("unknown region {0}")]
    UnknownRegion(RegionId),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("region cannot be split: {0}")]
    NoSplit(String),
    #[error("degenerate transform (|det| = {0:e})")]
    DegenerateTransform(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed data in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
