//! Command-line front end for the `ordstat` library: TOML run configs in,
//! plain-text or CSV tables out.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::Options;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use table::{parse_tables, render_all, Format, Precision, Table};
