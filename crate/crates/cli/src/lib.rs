//! Batch runner for the benchmark topology optimization problems.

pub mod config;
pub mod dice;
pub mod export;
pub mod run;

pub use config::{CaseKind, ForwardMode, RunConfig};
pub use dice::dice_similarity;
pub use export::{export_density, Format};
pub use run::{build_case, run_case, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{solver} solve failed: {source}")]
    Solver {
        solver: &'static str,
        #[source]
        source: demto::Error,
    },
    #[error("output error: {0}")]
    Io(String),
    #[error("designs differ in size: {left} vs {right}")]
    Shape { left: usize, right: usize },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Io(_) | CliError::Shape { .. } => 1,
        }
    }
}
