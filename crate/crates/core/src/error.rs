use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown variable `{name}` at {position}")]
    UnknownVariable { name: String, position: usize },

    #[error("invalid definition: {0}")]
    Definition(String),

    #[error("input outside machine domain: {0}")]
    Domain(String),

    #[error("evaluation failed on {branch}: {message}")]
    Eval { branch: String, message: String },

    #[error("type {0:?} has zero probability; cannot condition on it")]
    ZeroProbability(String),

    #[error("profile space of size {size} exceeds cap {cap}")]
    TooLarge { size: u128, cap: u128 },

    #[error("protocol violation at stage {stage}, {phase} phase, player {player}")]
    Protocol {
        stage: usize,
        phase: &'static str,
        player: usize,
    },

    #[error("fixed coin string exhausted after {0} bits")]
    CoinsExhausted(usize),

    #[error("no utility range declared; refusing to report a confidence interval")]
    MissingRange,

    #[error("{path}: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
