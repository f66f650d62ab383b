//! Configuration files, data tables, run reports and the command-line runner.

pub mod cli;
pub mod config;
pub mod output;

pub use cli::{main_with_args, run, Cli, Command, Overrides, RunOutcome};
pub use config::{defaults, parse_config, parse_config_str, ExperimentKind, RunConfig, S21Mode, Sampling, SweepOver};
pub use output::{read_table, Column, ErrorRecord, OutputDir, RunManifest, RunStatus, Table};
