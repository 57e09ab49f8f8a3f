//! Lazy interval reduction and the one-dimensional (magnitude × direction) reduction.

use crate::error::{Error, Result};
use crate::regret::Learner;
use crate::vector::Vector;

/// Tolerance on the unit-ball constraint of the direction learner.
const UNIT_BALL_SLACK: f64 = 1e-12;

/// Contiguous, ascending intervals `[a_k, b_k]` covering `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSchedule {
    ends: Vec<usize>,
    max_len: usize,
}

impl IntervalSchedule {
    /// Builds a schedule from inclusive `(start, end)` pairs.
    pub fn new(intervals: &[(usize, usize)]) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidSchedule("no intervals".into()));
        }
        let mut next = 1;
        let mut ends = Vec::with_capacity(intervals.len());
        let mut max_len = 0;
        for &(a, b) in intervals {
            if a != next {
                return Err(Error::InvalidSchedule(format!(
                    "interval starting at {a} does not continue from round {next}"
                )));
            }
            if b < a {
                return Err(Error::InvalidSchedule(format!("empty interval [{a}, {b}]")));
            }
            max_len = max_len.max(b - a + 1);
            ends.push(b);
            next = b + 1;
        }
        Ok(Self { ends, max_len })
    }

    /// Intervals of length `len` (the last may be shorter).
    pub fn uniform(horizon: usize, len: usize) -> Result<Self> {
        if horizon == 0 || len == 0 {
            return Err(Error::InvalidSchedule(
                "horizon and length must be positive".into(),
            ));
        }
        let intervals: Vec<_> = (1..=horizon)
            .step_by(len)
            .map(|a| (a, (a + len - 1).min(horizon)))
            .collect();
        Self::new(&intervals)
    }

    pub fn singletons(horizon: usize) -> Result<Self> {
        Self::uniform(horizon, 1)
    }

    pub fn horizon(&self) -> usize {
        *self.ends.last().expect("nonempty")
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    /// Inclusive interval bounds.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let mut start = 1;
        self.ends
            .iter()
            .map(|&b| {
                let iv = (start, b);
                start = b + 1;
                iv
            })
            .collect()
    }
}

/// Holds the base learner's play fixed within each interval and sends it the interval's
/// gradient sum at the interval's end.
#[derive(Debug, Clone)]
pub struct LazyWrap<L> {
    base: L,
    schedule: IntervalSchedule,
    interval: usize,
    t: usize,
    acc: Vector,
}

impl<L: Learner> LazyWrap<L> {
    pub fn new(base: L, schedule: IntervalSchedule) -> Self {
        let acc = Vector::zeros(base.dim());
        Self {
            base,
            schedule,
            interval: 0,
            t: 1,
            acc,
        }
    }

    /// Builds the base learner with its Lipschitz bound scaled by the longest interval.
    pub fn with_scaled_bound<F>(schedule: IntervalSchedule, g_bound: f64, build: F) -> Result<Self>
    where
        F: FnOnce(f64) -> Result<L>,
    {
        let base = build(g_bound * schedule.max_len() as f64)?;
        Ok(Self::new(base, schedule))
    }

    pub fn base(&self) -> &L {
        &self.base
    }

    pub fn schedule(&self) -> &IntervalSchedule {
        &self.schedule
    }
}

impl<L: Learner> Learner for LazyWrap<L> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn play(&self) -> Vector {
        self.base.play()
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        g.check_dim(self.dim())?;
        let end = *self
            .schedule
            .ends
            .get(self.interval)
            .ok_or(Error::OutsideSchedule { round: self.t })?;
        self.acc.add_assign(g);
        if self.t == end {
            let sum = std::mem::replace(&mut self.acc, Vector::zeros(g.dim()));
            self.base.update(&sum)?;
            self.interval += 1;
        }
        self.t += 1;
        Ok(())
    }
}

/// Plays `β_t x_t` with `β_t` from a one-dimensional learner and `x_t` from a unit-ball learner.
#[derive(Debug, Clone)]
pub struct OneDim<A, S> {
    magnitude: A,
    direction: S,
}

impl<A: Learner, S: Learner> OneDim<A, S> {
    pub fn new(magnitude: A, direction: S) -> Result<Self> {
        magnitude.play().check_dim(1)?;
        Ok(Self {
            magnitude,
            direction,
        })
    }

    pub fn magnitude(&self) -> &A {
        &self.magnitude
    }

    pub fn direction(&self) -> &S {
        &self.direction
    }

    /// Current `(β_t, x_t)`, checking `‖x_t‖ ≤ 1`.
    pub fn components(&self) -> Result<(f64, Vector)> {
        let x = self.direction.play();
        let n = x.norm();
        if n > 1.0 + UNIT_BALL_SLACK {
            return Err(Error::OutsideUnitBall { norm: n });
        }
        Ok((self.magnitude.play()[0], x))
    }
}

impl<A: Learner, S: Learner> Learner for OneDim<A, S> {
    fn dim(&self) -> usize {
        self.direction.dim()
    }

    fn play(&self) -> Vector {
        let (beta, x) = self
            .components()
            .expect("direction learner left the unit ball");
        x.scaled(beta)
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        let (_, x) = self.components()?;
        g.check_dim(x.dim())?;
        self.magnitude.update(&Vector::scalar(g.dot(&x)))?;
        self.direction.update(g)
    }
}

/// Plays the projection of the inner learner's iterate onto a centred ball (radius 1 by default).
#[derive(Debug, Clone)]
pub struct UnitBall<L> {
    inner: L,
    radius: f64,
}

impl<L: Learner> UnitBall<L> {
    pub fn new(inner: L) -> Self {
        Self { inner, radius: 1.0 }
    }

    pub fn with_radius(inner: L, radius: f64) -> Result<Self> {
        Ok(Self {
            inner,
            radius: crate::error::positive("radius", radius)?,
        })
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }
}

impl<L: Learner> Learner for UnitBall<L> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn play(&self) -> Vector {
        let w = self.inner.play();
        if w.norm() > self.radius {
            w.with_norm(self.radius)
        } else {
            w
        }
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.inner.update(g)
    }
}

/// Both sides of the one-dimensional decomposition
/// `Σ⟨g_t, w_t − u_t⟩ = Σĝ_t(β_t − M) + M Σ⟨g_t, x_t − u_t/M⟩`; with `M = 0` the right side is `Σĝ_tβ_t`.
pub fn onedim_identity(
    gs: &[Vector],
    betas: &[f64],
    xs: &[Vector],
    us: &[Vector],
) -> Result<(f64, f64)> {
    let n = gs.len();
    for (what, len) in [
        ("betas", betas.len()),
        ("directions", xs.len()),
        ("comparators", us.len()),
    ] {
        if len != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let m = us.iter().map(Vector::norm).fold(0.0, f64::max);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for t in 0..n {
        let w = xs[t].scaled(betas[t]);
        lhs += gs[t].dot(&w) - gs[t].dot(&us[t]);
        let g_hat = gs[t].dot(&xs[t]);
        if m > 0.0 {
            rhs += g_hat * (betas[t] - m) + m * (g_hat - gs[t].dot(&us[t]) / m);
        } else {
            rhs += g_hat * betas[t];
        }
    }
    Ok((lhs, rhs))
}

/// Both sides of the interval decomposition
/// `Σ_t⟨g_t, w_t − u_t⟩ = Σ_k⟨Σ_{t∈I_k} g_t, w_{τ_k} − u_{τ_k}⟩ + Σ_k Σ_{t∈I_k}⟨g_t, u_{τ_k} − u_t⟩`,
/// where `w_t` is constant on each interval and `τ_k` is the interval's last round.
pub fn lazy_identity(
    schedule: &IntervalSchedule,
    plays: &[Vector],
    gs: &[Vector],
    us: &[Vector],
) -> Result<(f64, f64)> {
    let n = schedule.horizon();
    for (what, len) in [
        ("plays", plays.len()),
        ("gradients", gs.len()),
        ("comparators", us.len()),
    ] {
        if len != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for t in 0..n {
        lhs += gs[t].dot(&plays[t]) - gs[t].dot(&us[t]);
    }
    for (a, b) in schedule.intervals() {
        let tau = b - 1;
        let mut sum = Vector::zeros(gs[0].dim());
        for t in (a - 1)..b {
            sum.add_assign(&gs[t]);
            rhs += gs[t].dot(&us[tau]) - gs[t].dot(&us[t]);
        }
        rhs += sum.dot(&plays[tau]) - sum.dot(&us[tau]);
    }
    Ok((lhs, rhs))
}
