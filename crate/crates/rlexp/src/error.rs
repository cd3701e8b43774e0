use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown environment id `{0}`")]
    UnknownEnv(String),

    #[error("invalid environment parameter: {0}")]
    InvalidParams(String),

    #[error("action {action} out of range, environment has {action_count} actions")]
    ActionOutOfRange { action: usize, action_count: usize },

    #[error("step called on a terminated episode, reset first")]
    StepAfterTerminal,

    #[error("step called before the first reset")]
    StepBeforeReset,

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("algorithm `{algorithm}` requires hyperparameter `{key}`")]
    MissingHyper { algorithm: String, key: String },

    #[error("hyperparameter {key}={value} rejected: {reason}")]
    InvalidHyper {
        key: String,
        value: f64,
        reason: String,
    },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("statistical precondition failed: {0}")]
    StatPrecondition(String),

    #[error("record file malformed: {0}")]
    RecordFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command line tool. Configuration and input
    /// problems exit with 2, failed statistical preconditions with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StatPrecondition(_) => 3,
            _ => 2,
        }
    }
}
