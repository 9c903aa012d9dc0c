//! Command-line experiments for `pontus-core`: configuration, the
//! `spectrum | relax | sweep | oracle` commands and their file output.

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub use commands::Outcome;
pub use config::{Format, RunConfig};

/// Writes every table of `out` into `dir` (created if missing).
pub fn write_outcome(out: &Outcome, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    out.tables.iter().map(|t| t.write(dir, format)).collect()
}
