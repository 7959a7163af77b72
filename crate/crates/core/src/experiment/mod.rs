//! Experiment configuration and batch execution behind the CLI.
//!
//! Every entry point is deterministic for a fixed seed: replicates draw from
//! counter-keyed streams and are reduced in replicate order, so the worker
//! pool size never changes the output bytes.

mod bridges;
mod config;
mod construct;
mod fig1;
mod simulate;

pub use bridges::{run_bandit, run_bwr, write_bandit, write_bwr, BanditConfig, BanditReport, BwrConfig, BwrReport};
pub use config::{ExperimentConfig, InitSpec, Topology};
pub use construct::{read_periodic_manifest, write_circulant, write_periodic_tight, MANIFEST_NAME};
pub use fig1::{reproduce_fig1, write_fig1, Fig1Cell, Fig1Params, Fig1Result};
pub use simulate::{simulate, write_simulation, RunSummary};

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

/// Fits with a coefficient of determination below this are flagged.
pub const LOW_R2: f64 = 0.95;

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialising {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
