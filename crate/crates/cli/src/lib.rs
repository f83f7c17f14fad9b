//! Command-line front end for the `solwave` library: TOML problem
//! descriptions in, CSV/JSON/SVG artifacts out.

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;

pub use commands::CliError;
pub use config::{parse_config, Overrides, RunConfig, SweepPlan};
