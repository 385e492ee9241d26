//! Command-line runner for the `photon-twin-core` processor model.
//!
//! Six commands map onto the experiments the chip supports:
//! `characterize`, `calibrate`, `hom`, `qpt`, `gates` and `vqe`. Each reads an
//! [`config::ExperimentConfig`], writes CSV/text data files stamped with a
//! provenance header, and returns a short [`Report`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};

/// Everything a command needs besides the configuration file itself.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    /// External data replacing the simulation (meaning depends on the command).
    pub ingest: Option<PathBuf>,
    pub simulate: bool,
    pub out: PathBuf,
}

/// Outcome of one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    /// Key figures, in order.
    pub summary: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn run(opts: &RunOptions) -> Result<Report> {
    commands::run(opts)
}
