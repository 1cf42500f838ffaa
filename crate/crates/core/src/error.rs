use thiserror::Error;

/// Errors raised across the warning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: episode '{episode}': non-monotone time ({prev} then {t})")]
    NonMonotoneTime {
        line: u64,
        episode: String,
        prev: f64,
        t: f64,
    },

    #[error("line {line}: negative gap {gap} m")]
    NegativeGap { line: u64, gap: f64 },

    #[error("episode '{0}' has no event rows and no manifest entry")]
    MissingEvent(String),

    #[error("invalid episode '{episode}': {message}")]
    InvalidEpisode { episode: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("class '{0}' is absent")]
    MissingClass(&'static str),

    #[error("could not split into partitions containing both classes after {0} attempts")]
    ClassEmptyPartition(usize),

    #[error("k = {k} exceeds the {n} training instances")]
    KTooLarge { k: usize, n: usize },

    #[error("no split found")]
    NoSplit,

    #[error("TOPSIS: {0}")]
    Topsis(String),

    #[error("model format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
