use thiserror::Error;
use torwalk::limits::LimitsError;
use torwalk::{KernelError, McError, QuadratureError, SpectralError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("step cap reached: {0}")]
    StepCap(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::StepCap(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NotConverged { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Quadrature(q) => q.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<LimitsError> for CliError {
    fn from(e: LimitsError) -> Self {
        match e {
            LimitsError::Quadrature(q) => q.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Kernel(k) => k.into(),
            // every other variant traces back to a configured value
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::StepCap { .. } => CliError::StepCap(e.to_string()),
            McError::Kernel(k) => k.into(),
            McError::Limits(l) => l.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
