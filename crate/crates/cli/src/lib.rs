//! Command-line experiments for the dimer simulator: configuration files,
//! CSV output and generated plot scripts.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

use std::path::{Path, PathBuf};

use nanodimer::coupling::CouplingError;
use nanodimer::materials::MaterialError;
use nanodimer::sweep::SweepError;
use thiserror::Error;

pub use config::{ConfigError, Experiment, RunConfig};
pub use plot::{emit_plot_script, Figure};
pub use run::{run, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: missing column '{column}'", file.display())]
    Schema { file: PathBuf, column: String },
}

impl CliError {
    /// Short machine-readable class printed as `error[category]`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Material(_) | CliError::Coupling(CouplingError::Material(_)) => "material",
            CliError::Coupling(_) => "coupling",
            CliError::Sweep(SweepError::Integration { .. }) => "integration",
            CliError::Sweep(SweepError::Coupling(_)) => "coupling",
            CliError::Sweep(_) => "sweep",
            CliError::Io { .. } => "io",
            CliError::Schema { .. } => "schema",
        }
    }
}

/// Reads `path` and parses it for `experiment`, resolving relative material
/// paths against the directory of `path`.
pub fn load_config(path: &Path, experiment: Experiment, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(output::io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(RunConfig::parse(&text, experiment, base, overrides)?)
}
