use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quantity that is nonnegative for on-shell inputs came out negative
    /// beyond roundoff. Indicates a formula bug rather than bad input.
    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("degenerate collision direction: {0}")]
    DegenerateDirection(String),

    #[error("near-singular input: {0}")]
    NearSingular(String),

    #[error("numerical blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
