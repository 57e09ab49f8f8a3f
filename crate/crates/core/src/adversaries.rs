//! Gradient and comparator generators, the lower-bound constructions, and a checker for the
//! structural conditions shared by FTRL-style update maps.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `SeedableRng::seed_from_u64`, so a `(config, seed)` pair always yields the same sequence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::regret::{ComparatorSequence, Learner};
use crate::vector::Vector;

/// Default block-length constant `√(2/π)` of the unconstrained construction.
pub const DEFAULT_C: f64 = 0.797_884_560_802_865_4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn default_c() -> f64 {
    DEFAULT_C
}

fn one() -> f64 {
    1.0
}

fn one_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryConfig {
    /// `g = +1` for the first half, `−1` after.
    ConstrainedLb {
        #[serde(rename = "T")]
        horizon: usize,
    },
    /// Alternating prefix followed by sign blocks.
    UnconstrainedLb {
        #[serde(rename = "T")]
        horizon: usize,
        #[serde(rename = "C", default = "default_c")]
        c: f64,
        #[serde(default = "one")]
        eps: f64,
    },
    /// i.i.d. sign vectors of norm `G` (each coordinate `±G/√d`).
    Rademacher {
        #[serde(rename = "T")]
        horizon: usize,
        seed: u64,
        #[serde(rename = "G", default = "one")]
        g_bound: f64,
        #[serde(default = "one_dim")]
        dim: usize,
    },
    /// i.i.d. `N(0, G²I)` draws rescaled to norm at most `G`.
    GaussianClipped {
        #[serde(rename = "T")]
        horizon: usize,
        seed: u64,
        #[serde(rename = "G", default = "one")]
        g_bound: f64,
        #[serde(default = "one_dim")]
        dim: usize,
    },
    /// The same gradient every round.
    Constant {
        #[serde(rename = "T")]
        horizon: usize,
        g: Vec<f64>,
    },
}

impl AdversaryConfig {
    pub fn horizon(&self) -> usize {
        match *self {
            AdversaryConfig::ConstrainedLb { horizon }
            | AdversaryConfig::UnconstrainedLb { horizon, .. }
            | AdversaryConfig::Rademacher { horizon, .. }
            | AdversaryConfig::GaussianClipped { horizon, .. }
            | AdversaryConfig::Constant { horizon, .. } => horizon,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AdversaryConfig::Rademacher { dim, .. }
            | AdversaryConfig::GaussianClipped { dim, .. } => *dim,
            AdversaryConfig::Constant { g, .. } => g.len(),
            _ => 1,
        }
    }

    /// Largest gradient norm the generator can emit.
    pub fn lipschitz(&self) -> f64 {
        match self {
            AdversaryConfig::Rademacher { g_bound, .. }
            | AdversaryConfig::GaussianClipped { g_bound, .. } => *g_bound,
            AdversaryConfig::Constant { g, .. } => {
                Vector::new(g.clone()).map(|v| v.norm()).unwrap_or(0.0)
            }
            _ => 1.0,
        }
    }

    pub fn gradients(&self) -> Result<Vec<Vector>> {
        match *self {
            AdversaryConfig::ConstrainedLb { horizon } => {
                Ok(to_vectors(&constrained_lb_sequence(horizon)?.0))
            }
            AdversaryConfig::UnconstrainedLb { horizon, c, .. } => {
                Ok(to_vectors(&unconstrained_lb_sequence(horizon, c)?.0))
            }
            _ => stochastic_gradients(self),
        }
    }

    /// The construction's own comparator sequence, for the lower-bound kinds.
    pub fn companion_comparators(&self) -> Result<Option<Vec<f64>>> {
        match *self {
            AdversaryConfig::ConstrainedLb { horizon } => {
                Ok(Some(constrained_lb_sequence(horizon)?.1))
            }
            AdversaryConfig::UnconstrainedLb { horizon, c, eps } => {
                let (gs, _) = unconstrained_lb_sequence(horizon, c)?;
                Ok(Some(unconstrained_lb_comparators(horizon, c, eps, &gs)?))
            }
            _ => Ok(None),
        }
    }
}

pub fn to_vectors(xs: &[f64]) -> Vec<Vector> {
    xs.iter().map(|&x| Vector::scalar(x)).collect()
}

/// `g_t = 1, u_t = −1` for `t ≤ T/2`; `g_t = −1, u_t = 1` afterwards.
pub fn constrained_lb_sequence(horizon: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if horizon < 2 || !horizon.is_multiple_of(2) {
        return Err(Error::InvalidHorizon {
            horizon,
            reason: "must be even and at least 2".into(),
        });
    }
    let half = horizon / 2;
    let gs = (1..=horizon)
        .map(|t| if t <= half { 1.0 } else { -1.0 })
        .collect();
    let us = (1..=horizon)
        .map(|t| if t <= half { -1.0 } else { 1.0 })
        .collect();
    Ok((gs, us))
}

/// `⌊C√(T/2)/2⌋`
pub fn unconstrained_block_len(horizon: usize, c: f64) -> usize {
    (c * (horizon as f64 / 2.0).sqrt() / 2.0).floor() as usize
}

/// First round of the block phase: the alternating prefix always has even length so that
/// it sums to zero, which keeps `|g_{1:t}| ≤ block_len` for every later `t`.
pub fn unconstrained_block_start(horizon: usize) -> usize {
    2 * (horizon.div_ceil(2) / 2) + 1
}

/// Alternating signs up to (about) `⌈T/2⌉`, then blocks of `block_len` rounds with sign `(−1)^k`.
pub fn unconstrained_lb_sequence(horizon: usize, c: f64) -> Result<(Vec<f64>, usize)> {
    let c = positive("C", c)?;
    let block = unconstrained_block_len(horizon, c);
    if block < 1 {
        return Err(Error::InvalidHorizon {
            horizon,
            reason: format!("needs C·sqrt(T/2) >= 2 (C = {c})"),
        });
    }
    let start = unconstrained_block_start(horizon);
    let gs = (1..=horizon)
        .map(|t| {
            if t < start {
                if t % 2 == 1 {
                    1.0
                } else {
                    -1.0
                }
            } else if ((t - start) / block).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Ok((gs, block))
}

/// `u_t = 0` on the prefix, `−2ε/C²` on positive blocks and `2ε/C²` on negative blocks.
pub fn unconstrained_lb_comparators(
    horizon: usize,
    c: f64,
    eps: f64,
    gs: &[f64],
) -> Result<Vec<f64>> {
    let eps = positive("eps", eps)?;
    let (expected, _) = unconstrained_lb_sequence(horizon, c)?;
    if gs != expected.as_slice() {
        return Err(Error::InvalidParameter {
            name: "gradient sequence",
            requirement: "generated with the same (T, C)",
            value: gs.len() as f64,
        });
    }
    let start = unconstrained_block_start(horizon);
    let a = 2.0 * eps / (c * c);
    let us: Vec<f64> = gs
        .iter()
        .enumerate()
        .map(|(i, &g)| if i + 1 < start { 0.0 } else { -a * g })
        .collect();
    if unconstrained_conditions_hold(horizon, c) {
        let (p, m) = crate::regret::path_length(&to_vectors(&us))?;
        let lo = eps * (2.0 * horizon as f64).sqrt() / c.powi(3);
        let hi = 8.0 * eps * (horizon as f64).sqrt() / c.powi(3);
        if p + m < lo || p + m > hi {
            return Err(Error::InvalidHorizon {
                horizon,
                reason: format!("P + M = {} outside [{lo}, {hi}]", p + m),
            });
        }
    }
    Ok(us)
}

/// The three largeness conditions of the unconstrained construction.
pub fn unconstrained_conditions_hold(horizon: usize, c: f64) -> bool {
    let t = horizon as f64;
    c * (t / 2.0).sqrt() >= 2.0
        && t - unconstrained_block_len(horizon, c) as f64 >= t / 2.0
        && 2.0 + (2.0 / c) * (2.0 * t).sqrt() <= (4.0 / c) * t.sqrt()
}

pub fn stochastic_gradients(config: &AdversaryConfig) -> Result<Vec<Vector>> {
    match config {
        AdversaryConfig::Rademacher {
            horizon,
            seed,
            g_bound,
            dim,
        } => {
            let g_bound = positive("G", *g_bound)?;
            check_dim(*dim)?;
            let mut r = rng(*seed);
            let scale = g_bound / (*dim as f64).sqrt();
            Ok((0..*horizon)
                .map(|_| {
                    let coords = (0..*dim)
                        .map(|_| if r.gen::<bool>() { scale } else { -scale })
                        .collect();
                    Vector::new(coords).expect("finite")
                })
                .collect())
        }
        AdversaryConfig::GaussianClipped {
            horizon,
            seed,
            g_bound,
            dim,
        } => {
            let g_bound = positive("G", *g_bound)?;
            check_dim(*dim)?;
            let mut r = rng(*seed);
            Ok((0..*horizon)
                .map(|_| {
                    let coords = (0..*dim)
                        .map(|_| g_bound * r.sample::<f64, _>(StandardNormal))
                        .collect();
                    let v = Vector::new(coords).expect("finite");
                    if v.norm() > g_bound {
                        v.with_norm(g_bound)
                    } else {
                        v
                    }
                })
                .collect())
        }
        AdversaryConfig::Constant { horizon, g } => {
            let v = Vector::new(g.clone())?;
            Ok(vec![v; *horizon])
        }
        _ => Err(Error::InvalidParameter {
            name: "adversary kind",
            requirement: "a stochastic or constant kind",
            value: f64::NAN,
        }),
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::Empty("dimension"))
    } else {
        Ok(())
    }
}

/// Piecewise-constant comparators: `values[0]` until the first switch point, `values[i]`
/// from `switch_points[i−1]` on.
pub fn piecewise_comparators(
    horizon: usize,
    switch_points: &[usize],
    values: &[Vector],
) -> Result<ComparatorSequence> {
    if values.len() != switch_points.len() + 1 {
        return Err(Error::LengthMismatch {
            what: "comparator values",
            expected: switch_points.len() + 1,
            found: values.len(),
        });
    }
    let ascending = switch_points.windows(2).all(|w| w[0] < w[1]);
    let in_range = switch_points.iter().all(|&s| (1..=horizon).contains(&s));
    if !ascending || !in_range {
        return Err(Error::UnorderedSwitchPoints);
    }
    let mut points = Vec::with_capacity(horizon);
    let mut piece = 0;
    for t in 1..=horizon {
        while piece < switch_points.len() && switch_points[piece] <= t {
            piece += 1;
        }
        points.push(values[piece].clone());
    }
    ComparatorSequence::new(points)
}

/// Random `±1` probe prefixes with lengths in `1..=max_len`.
pub fn ftrl_probes(count: usize, max_len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let len = r.gen_range(1..=max_len);
            (0..len)
                .map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Wraps a learner constructor as the map from a 1-D gradient prefix to the next iterate.
pub fn update_map<L, F>(make: F) -> impl Fn(&[f64]) -> Result<f64>
where
    L: Learner,
    F: Fn() -> Result<L>,
{
    move |prefix: &[f64]| {
        let mut learner = make()?;
        for &g in prefix {
            learner.update(&Vector::scalar(g))?;
        }
        Ok(learner.play()[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub name: &'static str,
    pub passed: bool,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl ConditionResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            violations: 0,
            first_violation: None,
        }
    }

    fn fail(&mut self, detail: impl FnOnce() -> String) {
        self.passed = false;
        self.violations += 1;
        if self.first_violation.is_none() {
            self.first_violation = Some(detail());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtrlConditionsReport {
    pub probes: usize,
    /// Sum dependence, sign opposition, oddness, monotonicity.
    pub conditions: [ConditionResult; 4],
}

impl FtrlConditionsReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

const FTRL_TOL: f64 = 1e-9;

/// Tests the four FTRL conditions on a 1-D update map over `±1` probe prefixes.
///
/// 1. `F` depends on the prefix only through its sum (checked on a shuffled copy).
/// 2. `F(g) · g_{1:t} ≤ 0`, with `F = 0` when the sum is zero.
/// 3. `F(−g) = −F(g)`.
/// 4. For each length `t`, `F` at sum `−x` is nondecreasing in `x > 0`.
pub fn check_ftrl_conditions<F>(
    map: F,
    probes: &[Vec<f64>],
    seed: u64,
) -> Result<FtrlConditionsReport>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut r = rng(seed);
    let mut c1 = ConditionResult::new("sum dependence");
    let mut c2 = ConditionResult::new("sign opposition");
    let mut c3 = ConditionResult::new("oddness");
    let mut c4 = ConditionResult::new("monotonicity");
    let close = |a: f64, b: f64| (a - b).abs() <= FTRL_TOL * (1.0 + a.abs().max(b.abs()));

    let mut lengths = Vec::new();
    for p in probes {
        let f = map(p)?;
        let sum: f64 = p.iter().sum();

        let mut shuffled = p.clone();
        shuffled.shuffle(&mut r);
        let fs = map(&shuffled)?;
        if !close(f, fs) {
            c1.fail(|| format!("prefix {p:?} -> {f}, permutation {shuffled:?} -> {fs}"));
        }

        let sign_ok = if sum == 0.0 {
            f.abs() <= 1e-12
        } else {
            f * sum <= 0.0
        };
        if !sign_ok {
            c2.fail(|| format!("prefix {p:?} with sum {sum} -> {f}"));
        }

        let neg: Vec<f64> = p.iter().map(|g| -g).collect();
        let fneg = map(&neg)?;
        if !close(f, -fneg) {
            c3.fail(|| format!("prefix {p:?} -> {f}, negated -> {fneg}"));
        }
        lengths.push(p.len());
    }

    lengths.sort_unstable();
    lengths.dedup();
    for len in lengths {
        let mut prev: Option<(usize, f64)> = None;
        let mut x = if len % 2 == 0 { 2 } else { 1 };
        while x <= len {
            // (len + x)/2 entries of −1 followed by (len − x)/2 entries of +1.
            let minus = (len + x) / 2;
            let seq: Vec<f64> = (0..len)
                .map(|i| if i < minus { -1.0 } else { 1.0 })
                .collect();
            let f = map(&seq)?;
            if let Some((px, pf)) = prev {
                if f < pf - FTRL_TOL * (1.0 + pf.abs()) {
                    c4.fail(|| format!("length {len}: F(-{px}) = {pf} > F(-{x}) = {f}"));
                }
            }
            prev = Some((x, f));
            x += 2;
        }
    }

    Ok(FtrlConditionsReport {
        probes: probes.len(),
        conditions: [c1, c2, c3, c4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pf_static::PfStatic;

    #[test]
    fn constrained_examples() {
        assert_eq!(
            constrained_lb_sequence(4).unwrap(),
            (vec![1.0, 1.0, -1.0, -1.0], vec![-1.0, -1.0, 1.0, 1.0])
        );
        assert_eq!(
            constrained_lb_sequence(2).unwrap(),
            (vec![1.0, -1.0], vec![-1.0, 1.0])
        );
        assert!(constrained_lb_sequence(3).is_err());
        assert!(constrained_lb_sequence(0).is_err());
    }

    #[test]
    fn unconstrained_examples() {
        assert!(unconstrained_lb_sequence(4, 1.0).is_err());
        let (gs, block) = unconstrained_lb_sequence(32, 1.0).unwrap();
        assert_eq!(block, 2);
        let us = unconstrained_lb_comparators(32, 1.0, 1.0, &gs).unwrap();
        assert_eq!(us.iter().fold(0.0f64, |m, u| m.max(u.abs())), 2.0);
        // alternating prefix sums to zero
        let start = unconstrained_block_start(32);
        assert_eq!(gs[..start - 1].iter().sum::<f64>(), 0.0);
        assert!(us[..start - 1].iter().all(|&u| u == 0.0));
        assert!(unconstrained_lb_comparators(32, 1.0, 1.0, &gs[1..]).is_err());
    }

    #[test]
    fn unconstrained_comparator_sum() {
        let horizon = 4096;
        let c = DEFAULT_C;
        let (gs, _) = unconstrained_lb_sequence(horizon, c).unwrap();
        assert!(unconstrained_conditions_hold(horizon, c));
        let us = unconstrained_lb_comparators(horizon, c, 1.0, &gs).unwrap();
        let gu: f64 = gs.iter().zip(&us).map(|(g, u)| g * u).sum();
        let start = unconstrained_block_start(horizon);
        let expected = -2.0 * (horizon - start + 1) as f64 / (c * c);
        assert!((gu - expected).abs() < 1e-9);
        assert!(gu <= -(horizon as f64) / (c * c));
    }

    #[test]
    fn stochastic_generators() {
        let cfg = AdversaryConfig::Rademacher {
            horizon: 100,
            seed: 9,
            g_bound: 1.0,
            dim: 1,
        };
        let a = cfg.gradients().unwrap();
        assert_eq!(a, cfg.gradients().unwrap());
        assert!(a.iter().all(|g| g[0].abs() == 1.0));

        let cfg = AdversaryConfig::GaussianClipped {
            horizon: 10_000,
            seed: 9,
            g_bound: 1.0,
            dim: 3,
        };
        let gs = cfg.gradients().unwrap();
        assert!(gs.iter().all(|g| g.norm() <= 1.0 + 1e-15));
        assert!(gs.iter().any(|g| g.norm() < 0.99));

        let multi = AdversaryConfig::Rademacher {
            horizon: 10,
            seed: 1,
            g_bound: 2.0,
            dim: 4,
        };
        assert!(multi
            .gradients()
            .unwrap()
            .iter()
            .all(|g| (g.norm() - 2.0).abs() < 1e-15));
    }

    #[test]
    fn config_parsing() {
        let cfg: AdversaryConfig =
            serde_json::from_str(r#"{"kind": "rademacher", "T": 5, "seed": 1}"#).unwrap();
        assert_eq!(cfg.lipschitz(), 1.0);
        assert_eq!(cfg.dim(), 1);
        let cfg: AdversaryConfig =
            serde_json::from_str(r#"{"kind": "unconstrained_lb", "T": 64}"#).unwrap();
        assert_eq!(
            cfg,
            AdversaryConfig::UnconstrainedLb {
                horizon: 64,
                c: DEFAULT_C,
                eps: 1.0
            }
        );
        assert!(serde_json::from_str::<AdversaryConfig>(
            r#"{"kind": "constant", "T": 5, "g": [1], "x": 0}"#
        )
        .is_err());
    }

    #[test]
    fn piecewise_examples() {
        let one = |x: f64| Vector::scalar(x);
        assert_eq!(
            piecewise_comparators(5, &[], &[one(3.0)])
                .unwrap()
                .path_length(),
            0.0
        );
        let us = piecewise_comparators(4, &[3], &[one(-1.0), one(1.0)]).unwrap();
        assert_eq!(us.points(), &[one(-1.0), one(-1.0), one(1.0), one(1.0)]);
        assert_eq!(us.path_length(), 2.0);
        let stairs =
            piecewise_comparators(10, &[2, 4, 6], &[one(0.0), one(0.5), one(1.0), one(1.5)])
                .unwrap();
        assert_eq!(stairs.path_length(), 1.5);
        assert!(piecewise_comparators(4, &[3, 2], &[one(0.0), one(1.0), one(2.0)]).is_err());
        assert!(piecewise_comparators(4, &[3], &[one(0.0)]).is_err());
    }

    #[test]
    fn ftrl_checker() {
        let probes = ftrl_probes(200, 12, 4);
        let zero = |_: &[f64]| -> Result<f64> { Ok(0.0) };
        let rep = check_ftrl_conditions(zero, &probes, 1).unwrap();
        assert!(rep.conditions[1..].iter().all(|c| c.passed));

        let pf = update_map(|| PfStatic::new(1.0, 1.0, 3.0, 1));
        assert!(check_ftrl_conditions(pf, &probes, 1).unwrap().passed());

        // a map that ignores order-independence
        let last = |p: &[f64]| -> Result<f64> {
            Ok(-p.last().copied().unwrap_or(0.0) * 0.1 - p.iter().sum::<f64>())
        };
        let rep = check_ftrl_conditions(last, &probes, 1).unwrap();
        assert!(!rep.conditions[0].passed);
        assert!(rep.conditions[0].first_violation.is_some());
    }
}
