//! Dynamic-regret learner: fixed-η centered mirror descent sub-learners with the composite
//! penalty `φ_t(w) = 2η‖g_t‖²‖w‖`, summed over a geometric step-size grid.

use crate::error::{positive, Error, Result};
use crate::pf_static::{check_gradient, finite_iterate, LIPSCHITZ_SLACK};
use crate::regret::{ComparatorSequence, Learner};
use crate::regularizer::RadialRegularizer;
use crate::vector::{KahanSum, Vector};
use crate::verification::{Composite, TraceRound};

/// `εG² / (V ln²(V/G²))`
pub fn dynamic_alpha(eps: f64, g_bound: f64, v: f64) -> f64 {
    let g2 = g_bound * g_bound;
    let l = (v / g2).ln();
    eps * g2 / (v * l * l)
}

/// Number of grid points, `max(1, ⌈log₂√T⌉)`: the least `K` with `4^K ≥ T`.
fn grid_len(horizon: usize) -> usize {
    let mut k = 0usize;
    let mut p = 1u128;
    while p < horizon as u128 {
        p *= 4;
        k += 1;
    }
    k.max(1)
}

/// Step sizes `{min(2^k/(G√T), 1/G) : 1 ≤ k ≤ ⌈log₂√T⌉}`, ascending and deduplicated.
pub fn dyn_grid(g_bound: f64, horizon: usize) -> Result<Vec<f64>> {
    let g_bound = positive("G", g_bound)?;
    if horizon == 0 {
        return Err(Error::InvalidHorizon {
            horizon,
            reason: "must be at least 1".into(),
        });
    }
    let root = (horizon as f64).sqrt();
    let mut grid: Vec<f64> = (1..=grid_len(horizon))
        .map(|k| (2f64.powi(k as i32) / (g_bound * root)).min(1.0 / g_bound))
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Shared `V_t` / `α_t` bookkeeping.
#[derive(Debug, Clone)]
struct AlphaTracker {
    g_bound: f64,
    eps: f64,
    v: KahanSum,
}

impl AlphaTracker {
    fn new(g_bound: f64, eps: f64) -> Self {
        Self {
            g_bound,
            eps,
            v: KahanSum::new(4.0 * g_bound * g_bound),
        }
    }

    fn alpha(&self) -> f64 {
        dynamic_alpha(self.eps, self.g_bound, self.v.value())
    }

    fn advance(&mut self, g: &Vector) {
        self.v.add(g.norm_sq());
    }
}

/// One fixed-η sub-learner; `α_t` is supplied by the caller.
#[derive(Debug, Clone)]
pub struct DynamicSub {
    eta: f64,
    w: Vector,
}

impl DynamicSub {
    pub fn new(eta: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("dimension"));
        }
        Ok(Self {
            eta: positive("eta", eta)?,
            w: Vector::zeros(dim),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn iterate(&self) -> &Vector {
        &self.w
    }

    pub fn regularizer(&self, alpha: f64) -> RadialRegularizer {
        RadialRegularizer::fixed_eta(alpha, self.eta).expect("positive alpha and eta")
    }

    /// `θ = ∇ψ_t(w) − g`, then `w' = (α_{t+1}θ/‖θ‖)(exp((η/2)max(‖θ‖ − 2η‖g‖², 0)) − 1)`.
    pub fn step(&mut self, g: &Vector, alpha: f64, alpha_next: f64) -> Result<()> {
        let theta = &self.regularizer(alpha).gradient(&self.w) - g;
        let r = (theta.norm() - 2.0 * self.eta * g.norm_sq()).max(0.0);
        let radius = self.regularizer(alpha_next).psi_prime_inverse(r);
        self.w = finite_iterate(theta.with_norm(radius))?;
        Ok(())
    }

    pub fn step_traced(&mut self, g: &Vector, alpha: f64, alpha_next: f64) -> Result<TraceRound> {
        let w = self.w.clone();
        self.step(g, alpha, alpha_next)?;
        Ok(TraceRound {
            w,
            w_next: self.w.clone(),
            g: g.clone(),
            psi: self.regularizer(alpha),
            psi_next: self.regularizer(alpha_next),
            composite: Composite::Norm {
                coef: 2.0 * self.eta * g.norm_sq(),
            },
        })
    }
}

/// A single sub-learner run on its own, owning its `V_t` / `α_t` sequence.
#[derive(Debug, Clone)]
pub struct DynamicSubLearner {
    sub: DynamicSub,
    tracker: AlphaTracker,
}

impl DynamicSubLearner {
    pub fn new(g_bound: f64, eps: f64, eta: f64, dim: usize) -> Result<Self> {
        let g_bound = positive("G", g_bound)?;
        let eps = positive("eps", eps)?;
        if eta > (1.0 + LIPSCHITZ_SLACK) / g_bound {
            return Err(Error::InvalidParameter {
                name: "eta",
                requirement: "at most 1/G",
                value: eta,
            });
        }
        Ok(Self {
            sub: DynamicSub::new(eta, dim)?,
            tracker: AlphaTracker::new(g_bound, eps),
        })
    }

    pub fn sub(&self) -> &DynamicSub {
        &self.sub
    }

    pub fn alpha(&self) -> f64 {
        self.tracker.alpha()
    }

    pub fn v(&self) -> f64 {
        self.tracker.v.value()
    }

    pub fn step_traced(&mut self, g: &Vector) -> Result<TraceRound> {
        check_gradient(g, self.sub.w.dim(), self.tracker.g_bound)?;
        let alpha = self.tracker.alpha();
        let mut next = self.tracker.clone();
        next.advance(g);
        let round = self.sub.step_traced(g, alpha, next.alpha())?;
        self.tracker = next;
        Ok(round)
    }
}

impl Learner for DynamicSubLearner {
    fn dim(&self) -> usize {
        self.sub.w.dim()
    }

    fn play(&self) -> Vector {
        self.sub.w.clone()
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.step_traced(g).map(|_| ())
    }
}

/// Plays the sum of the sub-learners' iterates over the step-size grid.
#[derive(Debug, Clone)]
pub struct DynamicLearner {
    subs: Vec<DynamicSub>,
    tracker: AlphaTracker,
    eps_total: f64,
    horizon: usize,
    t: usize,
}

impl DynamicLearner {
    /// `eps_total` is split evenly across the grid.
    pub fn new(g_bound: f64, eps_total: f64, horizon: usize, dim: usize) -> Result<Self> {
        let grid = dyn_grid(g_bound, horizon)?;
        let eps_total = positive("eps", eps_total)?;
        let eps_sub = eps_total / grid.len() as f64;
        let subs = grid
            .iter()
            .map(|&eta| DynamicSub::new(eta, dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            subs,
            tracker: AlphaTracker::new(g_bound, eps_sub),
            eps_total,
            horizon,
            t: 1,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.subs.iter().map(DynamicSub::eta).collect()
    }

    pub fn subs(&self) -> &[DynamicSub] {
        &self.subs
    }

    pub fn g_bound(&self) -> f64 {
        self.tracker.g_bound
    }

    pub fn eps_total(&self) -> f64 {
        self.eps_total
    }

    pub fn eps_per_sub(&self) -> f64 {
        self.tracker.eps
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.tracker.alpha()
    }

    pub fn v(&self) -> f64 {
        self.tracker.v.value()
    }

    /// Steps every sub-learner and returns their per-round traces in grid order.
    pub fn step_traced(&mut self, g: &Vector) -> Result<Vec<TraceRound>> {
        check_gradient(g, self.dim(), self.tracker.g_bound)?;
        let alpha = self.tracker.alpha();
        let mut next = self.tracker.clone();
        next.advance(g);
        let alpha_next = next.alpha();
        let mut subs = self.subs.clone();
        let rounds = subs
            .iter_mut()
            .map(|s| s.step_traced(g, alpha, alpha_next))
            .collect::<Result<Vec<_>>>()?;
        self.subs = subs;
        self.tracker = next;
        self.t += 1;
        Ok(rounds)
    }

    /// Bound on the dynamic regret of the rounds seen so far; `us` and `gs` cover them.
    pub fn bound_rhs(&self, us: &ComparatorSequence, gs: &[Vector]) -> Result<f64> {
        dyn_bound_rhs(
            self.tracker.g_bound,
            self.tracker.eps,
            self.subs.len(),
            self.alpha(),
            us,
            gs,
        )
    }

    /// The same bound from running sums over the rounds seen so far.
    pub fn bound_rhs_tracked(&self, acc: &DynBoundTracker) -> f64 {
        acc.rhs(
            self.tracker.g_bound,
            self.tracker.eps,
            self.subs.len(),
            self.alpha(),
        )
    }
}

impl Learner for DynamicLearner {
    fn dim(&self) -> usize {
        self.subs[0].w.dim()
    }

    fn play(&self) -> Vector {
        let mut sum = Vector::zeros(self.dim());
        for s in &self.subs {
            sum.add_assign(&s.w);
        }
        sum
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.step_traced(g).map(|_| ())
    }
}

/// `2εG|S| + 6√(2(M+P)L Σ‖g_t‖²‖u_t‖) + 4G(M+P)L` with
/// `L = max(ln(9MT²/(4α_{T+1}) + 1), 1)` and `ε` the per-sub-learner value.
pub fn dyn_bound_rhs(
    g_bound: f64,
    eps_sub: f64,
    grid_size: usize,
    alpha_next: f64,
    us: &ComparatorSequence,
    gs: &[Vector],
) -> Result<f64> {
    if us.len() != gs.len() {
        return Err(Error::LengthMismatch {
            what: "comparators",
            expected: gs.len(),
            found: us.len(),
        });
    }
    let mut acc = DynBoundTracker::default();
    for (g, u) in gs.iter().zip(us.points()) {
        acc.push(g, u);
    }
    Ok(acc.rhs(g_bound, eps_sub, grid_size, alpha_next))
}

/// Running `M`, `P` and `Σ‖g_t‖²‖u_t‖`, so [`dyn_bound_rhs`] can be evaluated on every prefix.
#[derive(Debug, Clone, Default)]
pub struct DynBoundTracker {
    rounds: usize,
    max_norm: f64,
    path: KahanSum,
    weighted: KahanSum,
    last: Option<Vector>,
}

impl DynBoundTracker {
    pub fn push(&mut self, g: &Vector, u: &Vector) {
        if let Some(prev) = &self.last {
            self.path.add(u.distance(prev));
        }
        let un = u.norm();
        self.max_norm = self.max_norm.max(un);
        self.weighted.add(g.norm_sq() * un);
        self.last = Some(u.clone());
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn rhs(&self, g_bound: f64, eps_sub: f64, grid_size: usize, alpha_next: f64) -> f64 {
        let horizon = self.rounds as f64;
        let m = self.max_norm;
        let mp = m + self.path.value();
        let l = (9.0 * m * horizon * horizon / (4.0 * alpha_next))
            .ln_1p()
            .max(1.0);
        2.0 * eps_sub * g_bound * grid_size as f64
            + 6.0 * (2.0 * mp * l * self.weighted.value()).sqrt()
            + 4.0 * g_bound * mp * l
    }
}
