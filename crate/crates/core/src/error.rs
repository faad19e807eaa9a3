use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("map file {path}: {msg}")]
    MapFormat { path: String, msg: String },
    #[error("scenario file {path}: {msg}")]
    Scenario { path: String, msg: String },
    #[error("no queued viewpoint is reachable from the vehicle")]
    AllUnreachable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
