use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] fracac::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("selftest: {0}")]
    Selftest(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver(fracac::Error::MaxPrinciple { .. }) => 3,
            Self::Selftest(_) => 4,
            Self::Config(_) => 2,
            Self::Solver(
                fracac::Error::Config(_)
                | fracac::Error::Grid(_)
                | fracac::Error::OrderOutOfRange(_)
                | fracac::Error::Size(_),
            ) => 2,
            Self::Solver(_) | Self::Io(_) => 1,
        }
    }
}
