//! Config-driven pipeline around `volspill-core`: reads price files, runs
//! the estimation stages and writes CSV reports with provenance headers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::{parse_run_config, parse_sim_config, ConfigFile, RunConfig, SimConfig};
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, RunReport};
