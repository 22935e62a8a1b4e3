use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] wqed_core::Error),
    #[error("eigensolver: {0}")]
    Eigen(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("verification failed: {failed}")]
    Verify { failed: String, table: String },
}

impl Error {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Verify { .. } => 1,
            Error::Config(_) | Error::ConfigRead { .. } | Error::ConfigParse { .. } => 2,
            Error::Core(wqed_core::Error::InvalidParameter { .. } | wqed_core::Error::SingularMomentum { .. }) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
