//! Configuration, orchestration and CSV output of the `lattice-spectra` tool.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, MatrixFormat, RunConfig};
pub use error::CliError;
pub use run::{config_hash, execute, header, write_outputs, Command, Output};
