//! Runs every config in a directory and compares runs that share a `group` label.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::engine::{RunOutput, RunReport};
use crate::write_outputs;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub config: String,
    pub group: Option<String>,
    pub passed: bool,
    pub error: Option<String>,
    pub report: Option<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub runs: Vec<String>,
    /// `max − min` of the final regrets.
    pub final_regret_spread: Option<f64>,
    /// Largest `‖x_t − y_t‖ / max(‖x_t‖, ‖y_t‖)` between the first run and any other.
    pub play_max_rel_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub passed: bool,
    pub runs: Vec<SweepEntry>,
    pub groups: Vec<GroupReport>,
}

/// `*.json` files in `dir`, sorted by name.
pub fn list_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn run_one(path: &Path) -> (Option<String>, Result<RunOutput>) {
    let config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return (None, Err(e)),
    };
    let out = crate::engine::run_experiment(&config).and_then(|out| {
        write_outputs(&config, &out)?;
        Ok(out)
    });
    (config.group.clone(), out)
}

fn max_rel_diff(a: &RunOutput, b: &RunOutput) -> Option<f64> {
    if a.plays.len() != b.plays.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (x, y) in a.plays.iter().zip(&b.plays) {
        if x.dim() != y.dim() {
            return None;
        }
        let scale = x.norm().max(y.norm());
        if scale > 0.0 {
            worst = worst.max(x.distance(y) / scale);
        }
    }
    Some(worst)
}

pub fn run_sweep(paths: &[PathBuf]) -> SweepReport {
    let results: Vec<(String, Option<String>, Result<RunOutput>)> = paths
        .par_iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let (group, out) = run_one(p);
            (name, group, out)
        })
        .collect();

    let mut by_group: BTreeMap<String, Vec<(String, Option<&RunOutput>)>> = BTreeMap::new();
    for (name, group, out) in &results {
        if let Some(g) = group {
            by_group
                .entry(g.clone())
                .or_default()
                .push((name.clone(), out.as_ref().ok()));
        }
    }
    let groups = by_group
        .into_iter()
        .map(|(group, members)| {
            let runs = members.iter().map(|(n, _)| n.clone()).collect();
            let outs: Option<Vec<&RunOutput>> = members.iter().map(|(_, o)| *o).collect();
            let (spread, diff) = match outs {
                Some(outs) => {
                    let regrets = outs.iter().map(|o| o.report.summary.final_regret);
                    let lo = regrets.clone().fold(f64::INFINITY, f64::min);
                    let hi = regrets.fold(f64::NEG_INFINITY, f64::max);
                    let diff = outs[1..]
                        .iter()
                        .map(|o| max_rel_diff(outs[0], o))
                        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)));
                    (Some(hi - lo), diff)
                }
                None => (None, None),
            };
            GroupReport {
                group,
                runs,
                final_regret_spread: spread,
                play_max_rel_diff: diff,
            }
        })
        .collect();

    let runs: Vec<SweepEntry> = results
        .into_iter()
        .map(|(config, group, out)| match out {
            Ok(out) => SweepEntry {
                config,
                group,
                passed: out.report.passed,
                error: None,
                report: Some(out.report),
            },
            Err(e) => SweepEntry {
                config,
                group,
                passed: false,
                error: Some(format!("{e:#}")),
                report: None,
            },
        })
        .collect();
    SweepReport {
        passed: !runs.is_empty() && runs.iter().all(|r| r.passed),
        runs,
        groups,
    }
}
