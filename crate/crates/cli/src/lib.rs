//! Library side of the `pseudospline` command-line tool. The binary only
//! parses arguments and calls [`commands::execute`].

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, CliResult};
