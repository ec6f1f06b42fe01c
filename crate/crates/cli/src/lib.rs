//! Batch pipelines and the analysis server behind the `tdr` binary.

pub mod commands;
pub mod server;

pub use commands::{CliError, CliResult};
pub use server::{router, serve, ServerConfig};
