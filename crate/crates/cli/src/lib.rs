//! Config-driven runner for the excsim scenarios.
//!
//! `excsim <scenario> [--config run.toml] [--out DIR]` resolves a TOML
//! configuration, runs the scenario (or every value of a sweep) and writes
//! CSV trajectories, a JSON report and the resolved manifest.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_for, render, RunConfig, Scenario};
pub use error::{CliError, ConfigError};
pub use run::{execute, simulate, Outcome};
