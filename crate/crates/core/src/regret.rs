//! Regret accounting and the learner contract.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vector::{KahanSum, Vector};

/// One round's (sub)gradient with its cached norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRound {
    pub t: usize,
    pub gradient: Vector,
    pub norm: f64,
}

impl GradientRound {
    pub fn new(t: usize, gradient: Vector) -> Self {
        let norm = gradient.norm();
        Self { t, gradient, norm }
    }

    /// Numbers a gradient sequence from round 1.
    pub fn sequence(gs: &[Vector]) -> Vec<GradientRound> {
        gs.iter()
            .enumerate()
            .map(|(i, g)| GradientRound::new(i + 1, g.clone()))
            .collect()
    }
}

/// Comparator sequence `u_1..u_T` with cached path length and maximum norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorSequence {
    points: Vec<Vector>,
    path_length: f64,
    max_norm: f64,
}

impl ComparatorSequence {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let (path_length, max_norm) = path_length(&points)?;
        Ok(Self {
            points,
            path_length,
            max_norm,
        })
    }

    /// The same point repeated `horizon` times.
    pub fn fixed(u: Vector, horizon: usize) -> Result<Self> {
        Self::new(vec![u; horizon])
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn path_length(&self) -> f64 {
        self.path_length
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    pub fn last(&self) -> &Vector {
        self.points.last().expect("nonempty by construction")
    }
}

/// Returns `(P_T, M)`: the summed jump norms and the largest point norm.
pub fn path_length(us: &[Vector]) -> Result<(f64, f64)> {
    let first = us.first().ok_or(Error::Empty("comparator sequence"))?;
    let d = first.dim();
    let mut p = KahanSum::default();
    let mut m = first.norm();
    for pair in us.windows(2) {
        pair[1].check_dim(d)?;
        p.add(pair[1].distance(&pair[0]));
        m = m.max(pair[1].norm());
    }
    Ok((p.value(), m))
}

/// Per-round and cumulative regret `Σ⟨g_t, w_t − u_t⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretLedger {
    pub inst: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub bound_rhs: Option<Vec<f64>>,
}

impl RegretLedger {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn horizon(&self) -> usize {
        self.inst.len()
    }
}

pub fn compute_regret(
    ws: &[Vector],
    gs: &[GradientRound],
    us: &ComparatorSequence,
) -> Result<RegretLedger> {
    let horizon = ws.len();
    if horizon == 0 {
        return Err(Error::Empty("play sequence"));
    }
    if gs.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "gradients",
            expected: horizon,
            found: gs.len(),
        });
    }
    if us.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "comparators",
            expected: horizon,
            found: us.len(),
        });
    }
    let d = ws[0].dim();
    let mut inst = Vec::with_capacity(horizon);
    let mut cumulative = Vec::with_capacity(horizon);
    let mut acc = KahanSum::default();
    for ((w, g), u) in ws.iter().zip(gs).zip(us.points()) {
        w.check_dim(d)?;
        g.gradient.check_dim(d)?;
        u.check_dim(d)?;
        let r = g.gradient.dot(w) - g.gradient.dot(u);
        acc.add(r);
        inst.push(r);
        cumulative.push(acc.value());
    }
    Ok(RegretLedger {
        inst,
        cumulative,
        bound_rhs: None,
    })
}

/// An online linear learner: plays a point, then observes a gradient.
pub trait Learner {
    fn dim(&self) -> usize;

    /// The point played in the current round.
    fn play(&self) -> Vector;

    fn update(&mut self, g: &Vector) -> Result<()>;
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn play(&self) -> Vector {
        (**self).play()
    }
    fn update(&mut self, g: &Vector) -> Result<()> {
        (**self).update(g)
    }
}

/// Feeds an oblivious gradient sequence to `learner` and returns the plays.
pub fn run<L: Learner + ?Sized>(learner: &mut L, gs: &[Vector]) -> Result<Vec<Vector>> {
    let mut plays = Vec::with_capacity(gs.len());
    for g in gs {
        g.check_dim(learner.dim())?;
        plays.push(learner.play());
        learner.update(g)?;
    }
    Ok(plays)
}

/// Always plays the same point.
#[derive(Debug, Clone)]
pub struct ConstantLearner {
    point: Vector,
}

impl ConstantLearner {
    pub fn new(point: Vector) -> Self {
        Self { point }
    }
}

impl Learner for ConstantLearner {
    fn dim(&self) -> usize {
        self.point.dim()
    }
    fn play(&self) -> Vector {
        self.point.clone()
    }
    fn update(&mut self, g: &Vector) -> Result<()> {
        g.check_dim(self.point.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::rng;
    use rand::Rng;

    fn scalars(xs: &[f64]) -> Vec<Vector> {
        xs.iter().map(|&x| Vector::scalar(x)).collect()
    }

    fn ledger(ws: &[f64], gs: &[f64], us: &[f64]) -> RegretLedger {
        let us = ComparatorSequence::new(scalars(us)).unwrap();
        compute_regret(&scalars(ws), &GradientRound::sequence(&scalars(gs)), &us).unwrap()
    }

    #[test]
    fn small_ledgers() {
        assert_eq!(ledger(&[0.0], &[1.0], &[0.0]).cumulative, vec![0.0]);
        assert_eq!(
            ledger(&[0.0, 0.0], &[1.0, -1.0], &[1.0, 1.0]).cumulative,
            vec![-1.0, 0.0]
        );
    }

    #[test]
    fn ledger_matches_reference_sum() {
        let mut r = rng(7);
        let mut draw = |n: usize| -> Vec<Vector> {
            (0..n)
                .map(|_| Vector::new((0..3).map(|_| r.gen_range(-1e3..1e3)).collect()).unwrap())
                .collect()
        };
        let (ws, gs, us) = (draw(100), draw(100), draw(100));
        let led = compute_regret(
            &ws,
            &GradientRound::sequence(&gs),
            &ComparatorSequence::new(us.clone()).unwrap(),
        )
        .unwrap();
        let mut terms: Vec<f64> = Vec::new();
        for t in 0..100 {
            for i in 0..3 {
                terms.push(gs[t][i] * ws[t][i]);
                terms.push(-gs[t][i] * us[t][i]);
            }
        }
        // pairwise-sorted reference
        terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let reference: f64 = terms.iter().sum();
        assert!((led.total() - reference).abs() <= 1e-9 * (1.0 + reference.abs()));
    }

    #[test]
    fn ledger_rejects_mismatches() {
        let us = ComparatorSequence::new(scalars(&[0.0, 0.0])).unwrap();
        assert!(compute_regret(
            &scalars(&[0.0]),
            &GradientRound::sequence(&scalars(&[1.0])),
            &us
        )
        .is_err());
        assert!(compute_regret(&[], &[], &us).is_err());
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(
            path_length(&scalars(&[-1.0, -1.0, 1.0, 1.0])).unwrap(),
            (2.0, 1.0)
        );
        assert_eq!(path_length(&scalars(&[0.0, 0.0, 0.0])).unwrap(), (0.0, 0.0));
        assert!(path_length(&[]).is_err());

        let mut r = rng(8);
        let walk: Vec<Vector> = (0..50)
            .map(|_| Vector::new((0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let (p, m) = path_length(&walk).unwrap();
        let p_ref: f64 = walk
            .windows(2)
            .map(|w| {
                (0..3)
                    .map(|i| (w[1][i] - w[0][i]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        let m_ref = walk.iter().map(|u| u.norm()).fold(0.0, f64::max);
        assert!((p - p_ref).abs() <= 1e-12 * p_ref);
        assert_eq!(m, m_ref);
    }

    #[test]
    fn run_plays_before_update() {
        let mut c = ConstantLearner::new(Vector::scalar(2.0));
        let plays = run(&mut c, &scalars(&[1.0, 1.0])).unwrap();
        assert_eq!(plays, scalars(&[2.0, 2.0]));
        assert!(run(&mut c, &[Vector::zeros(2)]).is_err());
    }
}
