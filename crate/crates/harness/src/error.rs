use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed record on line {line}: {message}")]
    Record { line: u64, message: String },
    #[error(transparent)]
    Numerical(#[from] mlbq::Error),
    #[error("{0} cell(s) failed")]
    CellFailures(usize),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// 1 for anything wrong with the inputs, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numerical(_) | Self::CellFailures(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
