use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },

    #[error("line {line}: frame id {got} does not follow {previous}")]
    Ordering {
        line: usize,
        previous: u64,
        got: u64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("no evidence: feature histogram is all zero")]
    NoEvidence,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("touch on cell ({row},{col}) outside {rows}x{cols} grid")]
    InvalidTouch {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("cue manifest is missing classes: {}", .0.join(", "))]
    ManifestMissing(Vec<String>),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),
}
