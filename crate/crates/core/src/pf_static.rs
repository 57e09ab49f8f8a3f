//! Parameter-free static-regret learner.
//!
//! Centered mirror descent with the capped regularizer `Ψ′_t(x) = k min_{η≤1/G}[F_t(x)/η + ηV_t]`,
//! `V_t = 4G² + Σ_{s<t}‖g_s‖²` and `α_t = εG/(√V_t ln²(V_t/G²))`. The update has the closed
//! form `w_{t+1} = (α_{t+1} θ/‖θ‖)(exp(f(θ)) − 1)` with `θ = −g_{1:t}`.

use log::warn;

use crate::error::{positive, Error, Result};
use crate::regret::Learner;
use crate::regularizer::RadialRegularizer;
use crate::vector::{KahanSum, Vector};
use crate::verification::{Composite, TraceRound};

pub const DEFAULT_K: f64 = 3.0;

/// Relative slack on the Lipschitz check.
pub(crate) const LIPSCHITZ_SLACK: f64 = 1e-12;

pub(crate) fn check_gradient(g: &Vector, dim: usize, bound: f64) -> Result<f64> {
    g.check_dim(dim)?;
    if !g.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    let norm = g.norm();
    if norm > bound * (1.0 + LIPSCHITZ_SLACK) {
        return Err(Error::GradientTooLarge { norm, bound });
    }
    Ok(norm)
}

pub(crate) fn check_k(k: f64, allow_small_k: bool) -> Result<f64> {
    let k = positive("k", k)?;
    if k < 3.0 {
        if !allow_small_k {
            return Err(Error::InvalidParameter {
                name: "k",
                requirement: "at least 3",
                value: k,
            });
        }
        warn!("k = {k} < 3: the stability conditions behind the regret bound do not hold");
    }
    Ok(k)
}

pub(crate) fn finite_iterate(w: Vector) -> Result<Vector> {
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::NonFinite("iterate (exponential overflow)"))
    }
}

/// `εG / (√V ln²(V/G²))`
pub fn static_alpha(eps: f64, g_bound: f64, v: f64) -> f64 {
    let l = (v / (g_bound * g_bound)).ln();
    eps * g_bound / (v.sqrt() * l * l)
}

#[derive(Debug, Clone)]
pub struct PfStatic {
    g_bound: f64,
    eps: f64,
    k: f64,
    t: usize,
    theta: Vector,
    v: KahanSum,
    alpha: f64,
    w: Vector,
}

impl PfStatic {
    pub fn new(g_bound: f64, eps: f64, k: f64, dim: usize) -> Result<Self> {
        Self::build(g_bound, eps, k, dim, false)
    }

    /// Like [`PfStatic::new`] but accepts `k < 3` with a logged warning.
    pub fn with_any_k(g_bound: f64, eps: f64, k: f64, dim: usize) -> Result<Self> {
        Self::build(g_bound, eps, k, dim, true)
    }

    fn build(g_bound: f64, eps: f64, k: f64, dim: usize, allow_small_k: bool) -> Result<Self> {
        let g_bound = positive("G", g_bound)?;
        let eps = positive("eps", eps)?;
        let k = check_k(k, allow_small_k)?;
        if dim == 0 {
            return Err(Error::Empty("dimension"));
        }
        let v = 4.0 * g_bound * g_bound;
        Ok(Self {
            g_bound,
            eps,
            k,
            t: 1,
            theta: Vector::zeros(dim),
            v: KahanSum::new(v),
            alpha: static_alpha(eps, g_bound, v),
            w: Vector::zeros(dim),
        })
    }

    /// Current round index `t` (1 before any update).
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn iterate(&self) -> &Vector {
        &self.w
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn v(&self) -> f64 {
        self.v.value()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g_bound(&self) -> f64 {
        self.g_bound
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `ψ_t` for the current round.
    pub fn regularizer(&self) -> RadialRegularizer {
        RadialRegularizer::capped(self.k, self.alpha, self.v(), 1.0 / self.g_bound)
            .expect("parameters validated at construction")
    }

    pub fn step(&mut self, g: &Vector) -> Result<()> {
        check_gradient(g, self.theta.dim(), self.g_bound)?;
        let mut theta = self.theta.clone();
        theta.sub_assign(g);
        let mut v = self.v;
        v.add(g.norm_sq());
        let alpha = static_alpha(self.eps, self.g_bound, v.value());
        let psi = RadialRegularizer::capped(self.k, alpha, v.value(), 1.0 / self.g_bound)?;
        let w = if theta.norm() <= 1e-12 * self.g_bound {
            Vector::zeros(theta.dim())
        } else {
            finite_iterate(psi.gradient_inverse(&theta))?
        };
        self.theta = theta;
        self.v = v;
        self.alpha = alpha;
        self.w = w;
        self.t += 1;
        Ok(())
    }

    pub fn step_traced(&mut self, g: &Vector) -> Result<TraceRound> {
        let w = self.w.clone();
        let psi = self.regularizer();
        self.step(g)?;
        Ok(TraceRound {
            w,
            w_next: self.w.clone(),
            g: g.clone(),
            psi,
            psi_next: self.regularizer(),
            composite: Composite::None,
        })
    }

    /// `4Gε + 2k‖u‖ max{√(V F(‖u‖)), G F(‖u‖)}` with the current (`T+1`-indexed) `V`, `α`.
    pub fn bound_rhs(&self, u: &Vector) -> f64 {
        let un = u.norm();
        let f = (un / self.alpha).ln_1p();
        4.0 * self.g_bound * self.eps
            + 2.0 * self.k * un * (self.v() * f).sqrt().max(self.g_bound * f)
    }
}

impl Learner for PfStatic {
    fn dim(&self) -> usize {
        self.theta.dim()
    }

    fn play(&self) -> Vector {
        self.w.clone()
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.step(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::{brute_force_update, radial_relative_error};
    use approx::assert_relative_eq;

    #[test]
    fn initial_state() {
        let pf = PfStatic::new(1.0, 1.0, 3.0, 4).unwrap();
        assert_eq!(pf.v(), 4.0);
        assert_relative_eq!(
            pf.alpha(),
            1.0 / (2.0 * 4f64.ln().powi(2)),
            max_relative = 1e-15
        );
        assert_relative_eq!(pf.alpha(), 0.260_171, max_relative = 1e-5);
        assert!(pf.iterate().is_zero() && pf.theta().is_zero());
        assert_eq!(pf.iterate().dim(), 4);

        let pf2 = PfStatic::new(2.0, 1.0, 3.0, 1).unwrap();
        assert_eq!(pf2.v(), 16.0);
        assert_relative_eq!(
            pf2.alpha(),
            2.0 / (4.0 * 4f64.ln().powi(2)),
            max_relative = 1e-15
        );
    }

    #[test]
    fn first_step_example() {
        let mut pf = PfStatic::new(1.0, 1.0, 3.0, 1).unwrap();
        let round = pf.step_traced(&Vector::scalar(1.0)).unwrap();
        assert_eq!(pf.theta()[0], -1.0);
        assert_eq!(pf.v(), 5.0);
        let alpha = 1.0 / (5f64.sqrt() * 5f64.ln().powi(2));
        assert_relative_eq!(pf.alpha(), alpha, max_relative = 1e-15);
        assert_relative_eq!(pf.alpha(), 0.172_65, max_relative = 1e-4);
        let w2 = -alpha * (1.0f64 / 180.0).exp_m1();
        assert_relative_eq!(pf.iterate()[0], w2, max_relative = 1e-12);
        assert_relative_eq!(pf.iterate()[0], -9.618e-4, max_relative = 1e-3);
        let oracle = brute_force_update(
            &round.psi,
            &round.psi_next,
            round.composite,
            &round.w,
            &round.g,
        )
        .unwrap();
        assert!(radial_relative_error(&oracle, pf.iterate()) <= 1e-8);
    }

    #[test]
    fn zero_gradients_keep_origin() {
        let mut pf = PfStatic::new(1.0, 1.0, 3.0, 2).unwrap();
        for _ in 0..100 {
            pf.step(&Vector::zeros(2)).unwrap();
            assert!(pf.iterate().is_zero());
        }
        assert_eq!(pf.round(), 101);
    }

    #[test]
    fn rejects_invalid_input() {
        let mut pf = PfStatic::new(1.0, 1.0, 3.0, 1).unwrap();
        assert!(matches!(
            pf.step(&Vector::scalar(1.5)),
            Err(Error::GradientTooLarge { .. })
        ));
        assert!(pf.step(&Vector::scalar(1.0 + 1e-13)).is_ok());
        assert!(pf.step(&Vector::zeros(2)).is_err());
        assert!(PfStatic::new(1.0, 1.0, 2.0, 1).is_err());
        assert!(PfStatic::with_any_k(1.0, 1.0, 2.0, 1).is_ok());
        assert!(PfStatic::new(0.0, 1.0, 3.0, 1).is_err());
        assert!(PfStatic::new(1.0, 1.0, 3.0, 0).is_err());
    }

    #[test]
    fn bound_examples() {
        let pf = PfStatic::new(1.0, 1.0, 3.0, 1).unwrap();
        assert_eq!(pf.bound_rhs(&Vector::scalar(0.0)), 4.0);
        let f = (1.0 / pf.alpha()).ln_1p();
        assert_relative_eq!(
            pf.bound_rhs(&Vector::scalar(1.0)),
            4.0 + 6.0 * (4.0 * f).sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            pf.bound_rhs(&Vector::scalar(1.0)),
            19.0726,
            max_relative = 1e-5
        );
    }
}
