//! Implicit-optimistic centered mirror descent.
//!
//! The anchor `x_t` follows the parameter-free update on the observed gradients with
//! `V̂_t = 16G² + Σ_{s<t}‖g_s − h_s‖²` (where `h_s` is the hint gradient at the played point)
//! and cap `η ≤ 1/(2G)`. The played point is `w_{t+1} = argmin_w ℓ̂_{t+1}(w) + D_{ψ_{t+1}}(w|x_{t+1})`.

use std::fmt;
use std::sync::Arc;

use crate::error::{positive, Error, Result};
use crate::pf_static::{check_gradient, check_k, finite_iterate, static_alpha, LIPSCHITZ_SLACK};
use crate::regret::Learner;
use crate::regularizer::RadialRegularizer;
use crate::vector::{KahanSum, Vector};
use crate::verification::{Composite, TraceRound};

const SOLVER_MAX_ITERATIONS: usize = 200;
const SOLVER_TOLERANCE: f64 = 1e-10;

/// Convex guess of the next loss, queried as a value/gradient oracle.
pub trait HintOracle: Send + Sync {
    fn value_and_gradient(&self, w: &Vector) -> (f64, Vector);

    fn lipschitz(&self) -> f64;

    /// Whether `target` is a subgradient at the origin; lets the solver accept `w = 0`
    /// for hints that are not differentiable there.
    fn origin_subgradient(&self, _target: &Vector) -> bool {
        false
    }
}

/// `ℓ̂(w) = c‖w‖`
#[derive(Debug, Clone, Copy)]
pub struct NormHint {
    pub scale: f64,
}

impl HintOracle for NormHint {
    fn value_and_gradient(&self, w: &Vector) -> (f64, Vector) {
        (self.scale * w.norm(), w.with_norm(self.scale))
    }

    fn lipschitz(&self) -> f64 {
        self.scale
    }

    fn origin_subgradient(&self, target: &Vector) -> bool {
        target.norm() <= self.scale
    }
}

#[derive(Clone)]
pub enum HintFunction {
    Linear(Vector),
    General(Arc<dyn HintOracle>),
}

impl fmt::Debug for HintFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HintFunction::Linear(g) => f.debug_tuple("Linear").field(g).finish(),
            HintFunction::General(o) => write!(f, "General(L={})", o.lipschitz()),
        }
    }
}

/// How the [`Learner`] impl picks the next hint.
#[derive(Debug, Clone)]
pub enum HintPolicy {
    /// `ℓ̂ ≡ 0`
    Zero,
    /// `ℓ̂_{t+1} = ℓ_t` for linear losses: `ĝ_{t+1} = g_t`.
    PreviousGradient,
    Fixed(HintFunction),
}

/// Result of the optimistic half-step.
#[derive(Debug, Clone)]
pub struct OptimisticStep {
    pub w: Vector,
    /// Subgradient of the hint at `w` satisfying first-order optimality.
    pub hint_gradient: Vector,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ImplicitOptimistic {
    g_bound: f64,
    eps: f64,
    k: f64,
    t: usize,
    x: Vector,
    theta: Vector,
    w: Vector,
    hint_grad: Vector,
    v_hat: KahanSum,
    alpha: f64,
    policy: HintPolicy,
}

impl ImplicitOptimistic {
    /// Starts at `x_1 = w_1 = 0` (the first hint is `ℓ̂_1 ≡ 0`).
    pub fn new(g_bound: f64, eps: f64, k: f64, dim: usize, policy: HintPolicy) -> Result<Self> {
        let g_bound = positive("G", g_bound)?;
        let eps = positive("eps", eps)?;
        let k = check_k(k, false)?;
        if dim == 0 {
            return Err(Error::Empty("dimension"));
        }
        let v = 16.0 * g_bound * g_bound;
        Ok(Self {
            g_bound,
            eps,
            k,
            t: 1,
            x: Vector::zeros(dim),
            theta: Vector::zeros(dim),
            w: Vector::zeros(dim),
            hint_grad: Vector::zeros(dim),
            v_hat: KahanSum::new(v),
            alpha: static_alpha(eps, g_bound, v),
            policy,
        })
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn anchor(&self) -> &Vector {
        &self.x
    }

    pub fn iterate(&self) -> &Vector {
        &self.w
    }

    pub fn v_hat(&self) -> f64 {
        self.v_hat.value()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta_cap(&self) -> f64 {
        0.5 / self.g_bound
    }

    pub fn regularizer(&self) -> RadialRegularizer {
        RadialRegularizer::capped(self.k, self.alpha, self.v_hat(), self.eta_cap())
            .expect("parameters validated at construction")
    }

    /// `x_{t+1} = argmin ⟨g,x⟩ + D_{ψ_t}(x|x_t) + Δ_t(x)`; `g` is the gradient at the played `w_t`.
    pub fn x_step(&mut self, g: &Vector) -> Result<TraceRound> {
        check_gradient(g, self.x.dim(), self.g_bound)?;
        let psi = self.regularizer();
        let mut v_hat = self.v_hat;
        v_hat.add((g - &self.hint_grad).norm_sq());
        let alpha = static_alpha(self.eps, self.g_bound, v_hat.value());
        let psi_next = RadialRegularizer::capped(self.k, alpha, v_hat.value(), self.eta_cap())?;
        let mut theta = self.theta.clone();
        theta.sub_assign(g);
        let x_next = if theta.norm() <= 1e-12 * self.g_bound {
            Vector::zeros(theta.dim())
        } else {
            finite_iterate(psi_next.gradient_inverse(&theta))?
        };
        let round = TraceRound {
            w: self.x.clone(),
            w_next: x_next.clone(),
            g: g.clone(),
            psi,
            psi_next,
            composite: Composite::None,
        };
        self.v_hat = v_hat;
        self.alpha = alpha;
        self.theta = theta;
        self.x = x_next;
        self.t += 1;
        Ok(round)
    }

    /// `w = argmin ℓ̂(w) + D_ψ(w|x)` under the current regularizer.
    pub fn optimistic_step(&mut self, hint: &HintFunction) -> Result<OptimisticStep> {
        let psi = self.regularizer();
        let step = match hint {
            HintFunction::Linear(g_hat) => {
                check_gradient(g_hat, self.x.dim(), self.g_bound)?;
                let w = finite_iterate(psi.gradient_inverse(&(&self.theta - g_hat)))?;
                OptimisticStep {
                    w,
                    hint_gradient: g_hat.clone(),
                    iterations: 0,
                    residual: 0.0,
                }
            }
            HintFunction::General(oracle) => {
                if oracle.lipschitz() > self.g_bound * (1.0 + LIPSCHITZ_SLACK) {
                    return Err(Error::GradientTooLarge {
                        norm: oracle.lipschitz(),
                        bound: self.g_bound,
                    });
                }
                solve_hint(&psi, &self.theta, oracle.as_ref())?
            }
        };
        self.w = step.w.clone();
        self.hint_grad = step.hint_gradient.clone();
        Ok(step)
    }

    /// Full round: anchor step on `g`, then the optimistic step on `hint`.
    pub fn step(
        &mut self,
        g: &Vector,
        hint: &HintFunction,
    ) -> Result<(TraceRound, OptimisticStep)> {
        let round = self.x_step(g)?;
        let opt = self.optimistic_step(hint)?;
        Ok((round, opt))
    }

    /// `4εG + 2k‖u‖ max{√(V̂ L), 2G L}` with `L = ln(‖u‖/α̂ + 1)` at the current statistics.
    pub fn bound_rhs(&self, u: &Vector) -> f64 {
        let un = u.norm();
        let l = (un / self.alpha).ln_1p();
        4.0 * self.eps * self.g_bound
            + 2.0 * self.k * un * (self.v_hat() * l).sqrt().max(2.0 * self.g_bound * l)
    }
}

/// Damped fixed-point solve of `∇ℓ̂(w) + ∇ψ(w) = dual`.
fn solve_hint(
    psi: &RadialRegularizer,
    dual: &Vector,
    oracle: &dyn HintOracle,
) -> Result<OptimisticStep> {
    let tol = SOLVER_TOLERANCE * (1.0 + dual.norm());
    if oracle.origin_subgradient(dual) {
        return Ok(OptimisticStep {
            w: Vector::zeros(dual.dim()),
            hint_gradient: dual.clone(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let residual = |w: &Vector| -> (f64, Vector) {
        let (_, s) = oracle.value_and_gradient(w);
        let r = (&(&s + &psi.gradient(w)) - dual).norm();
        (r, s)
    };
    let mut w = psi.gradient_inverse(dual);
    let (mut res, mut s) = residual(&w);
    let mut damping = 1.0;
    for iteration in 0..SOLVER_MAX_ITERATIONS {
        if res <= tol {
            return Ok(OptimisticStep {
                w: finite_iterate(w)?,
                hint_gradient: s,
                iterations: iteration,
                residual: res,
            });
        }
        let target = psi.gradient_inverse(&(dual - &s));
        let candidate = w.scaled(1.0 - damping).axpy(damping, &target);
        let (res_c, s_c) = residual(&candidate);
        if res_c > res {
            damping *= 0.5;
        } else {
            w = candidate;
            res = res_c;
            s = s_c;
        }
    }
    if res <= tol {
        return Ok(OptimisticStep {
            w: finite_iterate(w)?,
            hint_gradient: s,
            iterations: SOLVER_MAX_ITERATIONS,
            residual: res,
        });
    }
    Err(Error::NoConvergence {
        iterations: SOLVER_MAX_ITERATIONS,
        residual: res,
    })
}

impl Learner for ImplicitOptimistic {
    fn dim(&self) -> usize {
        self.x.dim()
    }

    fn play(&self) -> Vector {
        self.w.clone()
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.x_step(g)?;
        let hint = match &self.policy {
            HintPolicy::Zero => HintFunction::Linear(Vector::zeros(g.dim())),
            HintPolicy::PreviousGradient => HintFunction::Linear(g.clone()),
            HintPolicy::Fixed(h) => h.clone(),
        };
        self.optimistic_step(&hint)?;
        Ok(())
    }
}
