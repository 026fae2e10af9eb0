//! CLI error classes with a stable exit-status contract:
//! 0 ok / 2 config / 3 data / 4 numeric / 1 anything else.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric abort: {0}")]
    Numeric(String),

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<ffcl_core::Error> for CliError {
    fn from(e: ffcl_core::Error) -> Self {
        use ffcl_core::Error as E;
        match &e {
            E::NonFinite { .. } => CliError::Numeric(e.to_string()),
            E::Data(_) | E::EmptyDataset | E::ClassOutOfRange { .. } => {
                CliError::Data(e.to_string())
            }
            E::DimMismatch { .. } | E::BadShape { .. } => CliError::Data(e.to_string()),
            E::InvalidConfig(_) | E::VariantMisuse(_) => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
