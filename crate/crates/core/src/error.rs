use thiserror::Error;

/// Errors from the data model: schemas, datasets and their transformations.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema violation at row {row}, attribute {attribute:?}: {detail}")]
    SchemaViolation {
        row: usize,
        attribute: String,
        detail: String,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
