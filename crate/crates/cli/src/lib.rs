//! Configuration, experiment presets and writers around `synsync-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod population;
pub mod presets;

pub use config::{ExperimentConfig, Mode};
pub use error::CliError;
pub use experiment::{run, RunSummary};
