//! Checks that need only a CSV trace.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use centered_md::verification::check_integral_lemmas;
use centered_md::{KahanSum, Vector};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;

use crate::engine::{CheckReport, TraceRow, ROUND_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum TraceCheck {
    /// Rounds are numbered 1..T and `cum_regret` is the running sum of `inst_regret`.
    Ledger,
    /// `cum_regret ≤ slack·bound_rhs + 1e−9·t` wherever `bound_rhs` is present.
    Bound,
    /// `Σ delta_t ≤ 4·eps·G + 1e−9·T`.
    StabilitySum,
    /// Both summation lemmas on the gradient norms.
    IntegralLemmas,
}

impl TraceCheck {
    pub fn name(self) -> &'static str {
        match self {
            TraceCheck::Ledger => "ledger",
            TraceCheck::Bound => "bound",
            TraceCheck::StabilitySum => "stability_sum",
            TraceCheck::IntegralLemmas => "integral_lemmas",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceCheckParams {
    pub g_bound: Option<f64>,
    pub eps: Option<f64>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub horizon: usize,
    pub passed: bool,
    pub checks: BTreeMap<&'static str, CheckReport>,
}

pub fn check_trace(
    rows: &[TraceRow],
    checks: &[TraceCheck],
    params: TraceCheckParams,
) -> Result<TraceReport> {
    let horizon = rows.len();
    let mut out = BTreeMap::new();
    for &check in checks {
        let report = match check {
            TraceCheck::Ledger => {
                let mut sum = KahanSum::default();
                let mut abs = KahanSum::default();
                let mut first_violation = None;
                let mut max_error = 0.0f64;
                for (i, r) in rows.iter().enumerate() {
                    sum.add(r.inst_regret);
                    abs.add(r.inst_regret.abs());
                    let err = (r.cum_regret - sum.value()).abs();
                    max_error = max_error.max(err);
                    let bad = r.t != i + 1 || err.is_nan() || err > 1e-12 * abs.value().max(1.0);
                    if bad && first_violation.is_none() {
                        first_violation = Some(i + 1);
                    }
                }
                CheckReport {
                    passed: first_violation.is_none(),
                    details: json!({ "max_error": max_error, "first_violation": first_violation }),
                }
            }
            TraceCheck::Bound => {
                let mut first_violation = None;
                let mut checked = 0usize;
                let mut worst = f64::NEG_INFINITY;
                for r in rows {
                    let Some(b) = r.bound_rhs else { continue };
                    checked += 1;
                    worst = worst.max(r.cum_regret / b);
                    if first_violation.is_none()
                        && (r.cum_regret.is_nan()
                            || r.cum_regret > params.slack * b + ROUND_TOL * r.t as f64)
                    {
                        first_violation = Some(r.t);
                    }
                }
                if checked == 0 {
                    bail!("trace has no bound_rhs values");
                }
                CheckReport {
                    passed: first_violation.is_none(),
                    details: json!({
                        "slack": params.slack,
                        "rounds_checked": checked,
                        "worst_regret_to_bound": worst,
                        "first_violation": first_violation,
                    }),
                }
            }
            TraceCheck::StabilitySum => {
                let (Some(g), Some(eps)) = (params.g_bound, params.eps) else {
                    bail!("stability_sum needs --G and --eps");
                };
                let sum: KahanSum = rows.iter().filter_map(|r| r.delta_t).collect();
                let bound = 4.0 * eps * g;
                CheckReport {
                    passed: sum.value() <= bound + ROUND_TOL * horizon as f64,
                    details: json!({ "delta_sum": sum.value(), "bound": bound }),
                }
            }
            TraceCheck::IntegralLemmas => {
                let gs: Vec<Vector> = rows.iter().map(|r| Vector::scalar(r.g_norm)).collect();
                let g_bound = params.g_bound.unwrap_or_else(|| {
                    gs.iter()
                        .map(Vector::norm)
                        .fold(f64::MIN_POSITIVE, f64::max)
                });
                let rep = check_integral_lemmas(&gs, g_bound)?;
                CheckReport {
                    passed: rep.passed,
                    details: serde_json::to_value(rep)?,
                }
            }
        };
        out.insert(check.name(), report);
    }
    Ok(TraceReport {
        horizon,
        passed: out.values().all(|c| c.passed),
        checks: out,
    })
}
