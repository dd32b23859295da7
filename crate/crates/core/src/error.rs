use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (failing pivot in block {block})")]
    NotPositiveDefinite { block: usize },

    #[error("process noise block over interval {interval} is singular")]
    SingularNoise { interval: usize },

    #[error("noise profile evaluated to {value} at t = {t}")]
    NegativeNoise { t: f64, value: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("random walk exceeded {steps} steps (seed {seed})")]
    WalkStepCap { seed: u64, steps: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
