use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("augmentation error: {0}")]
    Augmentation(String),
    #[error("statistics error: {0}")]
    Stats(String),
    #[error("svm error: {0}")]
    Svm(String),
    #[error("selection error: {0}")]
    Selection(String),
    #[error("scale error: {0}")]
    Scale(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

impl Error {
    /// Coarse classification used by the CLI to pick an exit code:
    /// data/validation problems versus numeric/algorithmic failures.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Stats(_) | Error::Svm(_) | Error::Selection(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
