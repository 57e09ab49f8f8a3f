//! Wires adversary, learner, regret ledger and checkers for one experiment.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use centered_md::adversaries::{piecewise_comparators, to_vectors};
use centered_md::dynamic::{DynBoundTracker, DynamicLearner};
use centered_md::implicit::{HintFunction, HintPolicy, ImplicitOptimistic, NormHint};
use centered_md::pf_static::{PfStatic, DEFAULT_K};
use centered_md::reductions::{IntervalSchedule, LazyWrap, OneDim, UnitBall};
use centered_md::regret::Learner;
use centered_md::scale_free::ScaleFree;
use centered_md::verification::{
    check_centered_md, check_integral_lemmas, check_range_ratio, check_stability_lemma,
    StabilityPoint, TraceRound,
};
use centered_md::{ComparatorSequence, KahanSum, Vector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    Algorithm, AlgorithmParams, Check, ComparatorSpec, ExperimentConfig, HintKind, ScheduleSpec,
};

/// Slack on the scale-free bound, whose hidden constants are set to one.
pub const SCALE_FREE_BOUND_SLACK: f64 = 4.0;
/// Per-round additive tolerance on bound and lemma checks.
pub const ROUND_TOL: f64 = 1e-9;

/// One CSV row; `None` is written as an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub g_norm: f64,
    pub w_norm: f64,
    pub play_norm: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub delta_t: Option<f64>,
    pub bound_rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sublinearity {
    pub t: Vec<usize>,
    pub regret_over_t: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub final_regret: f64,
    pub regret_over_t: f64,
    pub final_bound_rhs: Option<f64>,
    pub regret_to_bound: Option<f64>,
    pub delta_sum: Option<f64>,
    pub max_g_norm: f64,
    pub max_play_norm: f64,
    pub comparator_path_length: f64,
    pub comparator_max_norm: f64,
    pub sublinearity: Sublinearity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub algorithm: &'static str,
    pub horizon: usize,
    pub dim: usize,
    pub passed: bool,
    pub summary: Summary,
    pub checks: BTreeMap<&'static str, CheckReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<TraceRow>,
    pub plays: Vec<Vector>,
    pub report: RunReport,
}

struct Resolved {
    g_bound: f64,
    eps: f64,
    k: f64,
}

fn resolve(params: &AlgorithmParams, config: &ExperimentConfig) -> Resolved {
    let lipschitz = config.adversary.lipschitz();
    Resolved {
        g_bound: params
            .g_bound
            .unwrap_or(if lipschitz > 0.0 { lipschitz } else { 1.0 }),
        eps: params.eps.unwrap_or(1.0),
        k: params.k.unwrap_or(DEFAULT_K),
    }
}

enum Engine {
    Pf(PfStatic),
    Dynamic(DynamicLearner),
    ScaleFree(ScaleFree),
    Implicit {
        learner: ImplicitOptimistic,
        hint: Option<HintFunction>,
    },
    Wrapped(Box<dyn Learner>),
}

/// Per-round learner output: the centered-MD steps taken (one per sub-learner) and `δ_t`.
struct Step {
    traces: Vec<TraceRound>,
    delta: Option<f64>,
}

fn hint_function(kind: HintKind, scale: f64, dim: usize) -> Option<HintFunction> {
    match kind {
        HintKind::PreviousGradient => None,
        HintKind::Zero => Some(HintFunction::Linear(Vector::zeros(dim))),
        HintKind::Norm => Some(HintFunction::General(Arc::new(NormHint { scale }))),
    }
}

fn boxed(
    alg: Algorithm,
    params: &AlgorithmParams,
    r: &Resolved,
    dim: usize,
    horizon: usize,
) -> Result<Box<dyn Learner>> {
    Ok(match alg {
        Algorithm::PfStatic => Box::new(PfStatic::new(r.g_bound, r.eps, r.k, dim)?),
        Algorithm::Dynamic => Box::new(DynamicLearner::new(r.g_bound, r.eps, horizon, dim)?),
        Algorithm::ScaleFree => Box::new(ScaleFree::new(r.eps, r.k, dim)?),
        Algorithm::ImplicitOptimistic => {
            let policy = match hint_function(
                params.hint.unwrap_or_default(),
                params.hint_scale.unwrap_or(r.g_bound),
                dim,
            ) {
                None => HintPolicy::PreviousGradient,
                Some(h) => HintPolicy::Fixed(h),
            };
            Box::new(ImplicitOptimistic::new(r.g_bound, r.eps, r.k, dim, policy)?)
        }
        Algorithm::Lazy | Algorithm::Onedim => bail!("wrappers cannot be nested"),
    })
}

impl Engine {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        let params = &config.algorithm_params;
        let r = resolve(params, config);
        let dim = config.adversary.dim();
        let horizon = params.horizon.unwrap_or(config.adversary.horizon());
        let engine = match config.algorithm {
            Algorithm::PfStatic => Engine::Pf(PfStatic::new(r.g_bound, r.eps, r.k, dim)?),
            Algorithm::Dynamic => {
                Engine::Dynamic(DynamicLearner::new(r.g_bound, r.eps, horizon, dim)?)
            }
            Algorithm::ScaleFree => Engine::ScaleFree(ScaleFree::new(r.eps, r.k, dim)?),
            Algorithm::ImplicitOptimistic => Engine::Implicit {
                learner: ImplicitOptimistic::new(
                    r.g_bound,
                    r.eps,
                    r.k,
                    dim,
                    HintPolicy::PreviousGradient,
                )?,
                hint: hint_function(
                    params.hint.unwrap_or_default(),
                    params.hint_scale.unwrap_or(r.g_bound),
                    dim,
                ),
            },
            Algorithm::Lazy => {
                let schedule = match params.schedule.as_ref().context("lazy needs a schedule")? {
                    ScheduleSpec::Uniform(len) => {
                        IntervalSchedule::uniform(config.adversary.horizon(), *len)?
                    }
                    ScheduleSpec::Intervals(iv) => IntervalSchedule::new(iv)?,
                };
                let base = params.base.unwrap_or(Algorithm::PfStatic);
                let intervals = schedule.len();
                let scaled = Resolved {
                    g_bound: r.g_bound * schedule.max_len() as f64,
                    ..r
                };
                let inner = boxed(base, params, &scaled, dim, intervals)?;
                Engine::Wrapped(Box::new(LazyWrap::new(inner, schedule)))
            }
            Algorithm::Onedim => {
                let base = params.base.unwrap_or(Algorithm::PfStatic);
                let magnitude = PfStatic::new(r.g_bound, r.eps, r.k, 1)?;
                let direction = UnitBall::new(boxed(base, params, &r, dim, horizon)?);
                Engine::Wrapped(Box::new(OneDim::new(magnitude, direction)?))
            }
        };
        Ok(match (params.radius, engine) {
            (None, e) => e,
            (Some(radius), e) => {
                Engine::Wrapped(Box::new(UnitBall::with_radius(e.into_learner(), radius)?))
            }
        })
    }

    fn into_learner(self) -> Box<dyn Learner> {
        match self {
            Engine::Pf(l) => Box::new(l),
            Engine::Dynamic(l) => Box::new(l),
            Engine::ScaleFree(l) => Box::new(l),
            Engine::Implicit { learner, hint } => Box::new(ImplicitAdapter { learner, hint }),
            Engine::Wrapped(l) => l,
        }
    }

    fn play(&self) -> Vector {
        match self {
            Engine::Pf(l) => l.play(),
            Engine::Dynamic(l) => l.play(),
            Engine::ScaleFree(l) => l.play(),
            Engine::Implicit { learner, .. } => learner.play(),
            Engine::Wrapped(l) => l.play(),
        }
    }

    /// Norm of the learner's own iterate (before any projection or optimistic step).
    fn internal_norm(&self) -> f64 {
        match self {
            Engine::Pf(l) => l.iterate().norm(),
            Engine::Dynamic(l) => l.play().norm(),
            Engine::ScaleFree(l) => l.iterate().norm(),
            Engine::Implicit { learner, .. } => learner.anchor().norm(),
            Engine::Wrapped(l) => l.play().norm(),
        }
    }

    fn step(&mut self, g: &Vector) -> Result<Step> {
        Ok(match self {
            Engine::Pf(l) => {
                let tr = l.step_traced(g)?;
                Step {
                    delta: Some(tr.delta()?),
                    traces: vec![tr],
                }
            }
            Engine::Dynamic(l) => {
                let traces = l.step_traced(g)?;
                let mut sum = KahanSum::default();
                for tr in &traces {
                    sum.add(tr.delta()?);
                }
                Step {
                    delta: Some(sum.value()),
                    traces,
                }
            }
            Engine::ScaleFree(l) => {
                let round = l.step(g)?;
                match round.inner {
                    Some(tr) => Step {
                        delta: Some(tr.delta()?),
                        traces: vec![tr],
                    },
                    None => Step {
                        delta: None,
                        traces: vec![],
                    },
                }
            }
            Engine::Implicit { learner, hint } => {
                let tr = learner.x_step(g)?;
                let h = hint
                    .clone()
                    .unwrap_or_else(|| HintFunction::Linear(g.clone()));
                learner.optimistic_step(&h)?;
                Step {
                    delta: Some(tr.delta()?),
                    traces: vec![tr],
                }
            }
            Engine::Wrapped(l) => {
                l.update(g)?;
                Step {
                    delta: None,
                    traces: vec![],
                }
            }
        })
    }

    /// Bound on the regret so far against comparator `u` (fixed) or the tracked sequence.
    fn bound(&self, u: Option<&Vector>, dyn_acc: &DynBoundTracker) -> Option<f64> {
        match (self, u) {
            (Engine::Pf(l), Some(u)) => Some(l.bound_rhs(u)),
            (Engine::ScaleFree(l), Some(u)) => Some(l.bound_rhs(u)),
            (Engine::Implicit { learner, .. }, Some(u)) => Some(learner.bound_rhs(u)),
            (Engine::Dynamic(l), _) => Some(l.bound_rhs_tracked(dyn_acc)),
            _ => None,
        }
    }

    fn stability_point(&self) -> StabilityPoint {
        match self {
            Engine::Dynamic(_) => StabilityPoint::Fixed { x0: 0.0 },
            _ => StabilityPoint::unit_log(),
        }
    }

    fn channel_labels(&self) -> Vec<String> {
        match self {
            Engine::Dynamic(l) => l.grid().iter().map(|eta| format!("eta={eta:e}")).collect(),
            Engine::ScaleFree(_) => vec!["inner".into()],
            Engine::Implicit { .. } => vec!["anchor".into()],
            _ => vec!["learner".into()],
        }
    }
}

/// Implicit learner driven by a fixed hint (or the previous gradient), as a plain [`Learner`].
struct ImplicitAdapter {
    learner: ImplicitOptimistic,
    hint: Option<HintFunction>,
}

impl Learner for ImplicitAdapter {
    fn dim(&self) -> usize {
        self.learner.dim()
    }

    fn play(&self) -> Vector {
        self.learner.play()
    }

    fn update(&mut self, g: &Vector) -> centered_md::Result<()> {
        self.learner.x_step(g)?;
        let h = self
            .hint
            .clone()
            .unwrap_or_else(|| HintFunction::Linear(g.clone()));
        self.learner.optimistic_step(&h).map(|_| ())
    }
}

fn comparators(
    config: &ExperimentConfig,
    dim: usize,
    horizon: usize,
) -> Result<(Vec<Vector>, bool)> {
    Ok(match &config.comparators {
        None => (vec![Vector::zeros(dim); horizon], true),
        Some(ComparatorSpec::Fixed { u }) => {
            let u = Vector::new(u.clone()).context("comparators.u")?;
            u.check_dim(dim).context("comparators.u")?;
            (vec![u; horizon], true)
        }
        Some(ComparatorSpec::Piecewise {
            switch_points,
            values,
        }) => {
            let values = values
                .iter()
                .map(|v| Vector::new(v.clone()))
                .collect::<centered_md::Result<Vec<_>>>()
                .context("comparators.values")?;
            let seq = piecewise_comparators(horizon, switch_points, &values)?;
            if seq.dim() != dim {
                bail!(
                    "comparators.values have dimension {}, adversary has {dim}",
                    seq.dim()
                );
            }
            (seq.points().to_vec(), false)
        }
        Some(ComparatorSpec::Companion) => {
            let us = config
                .adversary
                .companion_comparators()?
                .context("adversary has no companion comparators")?;
            (to_vectors(&us), false)
        }
    })
}

fn sublinearity(rows: &[TraceRow]) -> Sublinearity {
    let n = rows.len();
    let mut t: Vec<usize> = [n / 8, n / 4, n / 2, n]
        .into_iter()
        .filter(|&x| x >= 1)
        .collect();
    t.dedup();
    let regret_over_t: Vec<f64> = t
        .iter()
        .map(|&s| rows[s - 1].cum_regret / s as f64)
        .collect();
    let decreasing = regret_over_t.windows(2).all(|w| w[1] < w[0]);
    Sublinearity {
        t,
        regret_over_t,
        decreasing,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let gs = config.adversary.gradients()?;
    let horizon = gs.len();
    let dim = config.adversary.dim();
    let (us, fixed) = comparators(config, dim, horizon)?;
    let mut engine = Engine::build(config)?;

    let keep_traces = config
        .verify
        .iter()
        .any(|c| matches!(c, Check::CenteredMd | Check::Stability));
    let labels = engine.channel_labels();
    let mut channels: Vec<Vec<TraceRound>> = vec![Vec::new(); labels.len()];
    let mut channel_rounds: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];

    let mut rows = Vec::with_capacity(horizon);
    let mut plays = Vec::with_capacity(horizon);
    let mut cum = KahanSum::default();
    let mut delta_sum: Option<KahanSum> = None;
    let mut dyn_acc = DynBoundTracker::default();
    for (i, (g, u)) in gs.iter().zip(&us).enumerate() {
        let play = engine.play();
        let w_norm = engine.internal_norm();
        let inst = g.dot(&play) - g.dot(u);
        cum.add(inst);
        let step = engine
            .step(g)
            .with_context(|| format!("learner failed in round {}", i + 1))?;
        if let Some(d) = step.delta {
            delta_sum.get_or_insert_with(KahanSum::default).add(d);
        }
        dyn_acc.push(g, u);
        if keep_traces {
            for (c, tr) in step.traces.into_iter().enumerate() {
                channels[c].push(tr);
                channel_rounds[c].push(i);
            }
        }
        rows.push(TraceRow {
            t: i + 1,
            g_norm: g.norm(),
            w_norm,
            play_norm: play.norm(),
            inst_regret: inst,
            cum_regret: cum.value(),
            delta_t: step.delta,
            bound_rhs: engine.bound(fixed.then_some(u), &dyn_acc),
        });
        plays.push(play);
    }

    let seq = ComparatorSequence::new(us.clone())?;
    let final_regret = cum.value();
    let final_bound = rows.last().and_then(|r| r.bound_rhs);
    let summary = Summary {
        final_regret,
        regret_over_t: final_regret / horizon as f64,
        final_bound_rhs: final_bound,
        regret_to_bound: final_bound.map(|b| final_regret / b),
        delta_sum: delta_sum.map(|s| s.value()),
        max_g_norm: rows.iter().map(|r| r.g_norm).fold(0.0, f64::max),
        max_play_norm: rows.iter().map(|r| r.play_norm).fold(0.0, f64::max),
        comparator_path_length: seq.path_length(),
        comparator_max_norm: seq.max_norm(),
        sublinearity: sublinearity(&rows),
    };

    let r = resolve(&config.algorithm_params, config);
    let mut checks = BTreeMap::new();
    for &check in &config.verify {
        let report = match check {
            Check::CenteredMd => {
                let mut passed = true;
                let mut per = Vec::new();
                for ((label, trace), rounds) in labels.iter().zip(&channels).zip(&channel_rounds) {
                    if trace.is_empty() {
                        continue;
                    }
                    let sub_us =
                        ComparatorSequence::new(rounds.iter().map(|&i| us[i].clone()).collect())?;
                    let rep = check_centered_md(trace, &sub_us)?;
                    passed &= rep.passed;
                    per.push(json!({ "channel": label, "report": rep }));
                }
                CheckReport {
                    passed,
                    details: json!({ "channels": per }),
                }
            }
            Check::Stability => {
                let mut passed = true;
                let mut per = Vec::new();
                for (label, trace) in labels.iter().zip(&channels) {
                    if trace.is_empty() {
                        continue;
                    }
                    let rep = check_stability_lemma(trace, engine.stability_point())?;
                    passed &= rep.passed;
                    per.push(json!({ "channel": label, "report": rep }));
                }
                CheckReport {
                    passed,
                    details: json!({ "channels": per }),
                }
            }
            Check::StabilitySum => {
                let sum = summary.delta_sum.unwrap_or(0.0);
                let bound = 4.0 * r.eps * r.g_bound;
                CheckReport {
                    passed: sum <= bound + ROUND_TOL * horizon as f64,
                    details: json!({ "delta_sum": sum, "bound": bound }),
                }
            }
            Check::Bound => {
                let slack = match config.algorithm {
                    Algorithm::ScaleFree => SCALE_FREE_BOUND_SLACK,
                    _ => 1.0,
                };
                let mut first_violation = None;
                let mut worst_ratio = f64::NEG_INFINITY;
                for row in &rows {
                    let Some(b) = row.bound_rhs else { continue };
                    worst_ratio = worst_ratio.max(row.cum_regret / b);
                    if first_violation.is_none()
                        && row.cum_regret > slack * b + ROUND_TOL * row.t as f64
                    {
                        first_violation = Some(row.t);
                    }
                }
                CheckReport {
                    passed: first_violation.is_none(),
                    details: json!({
                        "slack": slack,
                        "worst_regret_to_bound": worst_ratio,
                        "first_violation": first_violation,
                    }),
                }
            }
            Check::IntegralLemmas => {
                let g_bound = match config.algorithm {
                    Algorithm::ScaleFree => summary.max_g_norm.max(f64::MIN_POSITIVE),
                    _ => r.g_bound,
                };
                let rep = check_integral_lemmas(&gs, g_bound)?;
                CheckReport {
                    passed: rep.passed,
                    details: serde_json::to_value(rep)?,
                }
            }
            Check::RangeRatio => {
                let Engine::ScaleFree(sf) = &engine else {
                    bail!("range_ratio needs scale_free");
                };
                let rep = check_range_ratio(sf.lemma_sum(), sf.eps(), sf.last_hint(), horizon);
                CheckReport {
                    passed: rep.passed,
                    details: serde_json::to_value(rep)?,
                }
            }
        };
        checks.insert(check.name(), report);
    }

    let passed = checks.values().all(|c| c.passed);
    Ok(RunOutput {
        rows,
        plays,
        report: RunReport {
            algorithm: config.algorithm.name(),
            horizon,
            dim,
            passed,
            summary,
            checks,
        },
    })
}
