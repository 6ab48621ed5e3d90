use momentmap::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    /// Computation finished but did not meet its contract (divergence,
    /// failed golden checks).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    /// 1 invalid config, 2 infeasibility, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Numerical(_) => 3,
            Self::Core(e) => match e {
                CoreError::InvalidInput(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::InvalidFilter(_)
                | CoreError::RootOnCircle { .. }
                | CoreError::DegenerateFactor => 1,
                CoreError::Infeasible { .. } | CoreError::InfeasiblePath { .. } => 2,
                CoreError::SingularFactor { .. }
                | CoreError::NotPolynomial { .. }
                | CoreError::NoSignChange { .. }
                | CoreError::RankMismatch { .. }
                | CoreError::Numerical(_) => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
