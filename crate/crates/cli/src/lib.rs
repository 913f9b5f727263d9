//! Scenario runner and identity-audit driver behind the `riesz` binary.

pub mod lemmas;
pub mod runner;
pub mod scenario;

use std::path::Path;

pub use lemmas::{check_lemmas, ExpectRegistry, LemmaReport};
pub use runner::{run_scenario, RunReport};
pub use scenario::{Overrides, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] riesz_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
