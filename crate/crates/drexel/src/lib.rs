//! Experiment harness, file formats and command line for the `drexel-core`
//! samplers.

pub mod config;
pub mod harness;
pub mod heatmap;
pub mod io;

use std::path::PathBuf;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use harness::{run_experiment, ExperimentReport, RepeatOutcome, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] io::FormatError),
    #[error(transparent)]
    Core(#[from] drexel_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("refusing to write `{0}` outside the output directory")]
    OutsideOutput(String),
    #[error("{0}")]
    Other(String),
}

impl HarnessError {
    /// 2 for invalid input, 3 for numeric or capacity failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use drexel_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::OutsideOutput(_) => 2,
            HarnessError::Format(io::FormatError::Io { .. }) => 1,
            HarnessError::Format(io::FormatError::Invalid(e)) | HarnessError::Core(e) => match e {
                E::NonFinite { .. } | E::Capacity { .. } | E::Precondition(_) => 3,
                _ => 2,
            },
            HarnessError::Format(_) => 2,
            HarnessError::Io { .. } | HarnessError::Other(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
