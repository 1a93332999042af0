//! Command-line front end for `ep-cavity`: resolves a [`RunConfig`] from
//! flags and config files, runs one library operation and writes its data
//! table together with a JSON manifest.

pub mod config;
pub mod run;
pub mod table;

use thiserror::Error;

pub use config::{parse_config, CommandKind, Format, ParamValue, RunConfig};
pub use run::{manifest_path, run_command, Outputs};
pub use table::{Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values. Carries the full message.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error("{0}")]
    Library(#[from] ep_cavity::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 for help and version requests, 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Clap(e) => match e.exit_code() {
                0 => 0,
                _ => 2,
            },
            CliError::Library(_) | CliError::Io { .. } => 1,
        }
    }
}
