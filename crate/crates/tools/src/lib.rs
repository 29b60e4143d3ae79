//! Files, configuration and the command-line front end for `rsc-core`.
//!
//! - [`config`]: the TOML run configuration and its validation
//! - [`table`]: rectangular result tables and the CSV dialect
//! - [`output`]: run context and the CSV + JSON files each command writes
//! - [`commands`]: one function per subcommand
//! - [`report`]: markdown aggregation of a finished output directory
//! - [`cli`]: argument parsing for the `rsc` binary

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod table;

pub use error::ToolError;
