//! Experiment harness: config parsing, runs, CSV traces and JSON reports.

pub mod config;
pub mod engine;
pub mod sweep;
pub mod trace;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::engine::RunOutput;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Writes the trace and report files named in `config.outputs`.
pub fn write_outputs(config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    if let Some(path) = &config.outputs.trace {
        let mut w = create(path)?;
        trace::write_trace(&mut w, &out.rows)?;
        w.flush()?;
    }
    if let Some(path) = &config.outputs.report {
        write_text(path, &to_json(&out.report)?)?;
    }
    Ok(())
}
