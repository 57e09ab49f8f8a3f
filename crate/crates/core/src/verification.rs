//! Proof-term diagnostics and independent oracles for centered mirror descent runs.
//!
//! A run is described by its [`TraceRound`]s: the iterates before and after each step, the
//! gradient, the regularizers `ψ_t` and `ψ_{t+1}`, and the composite penalty. From these the
//! module recomputes the stability terms `δ_t`, the comparator-drift terms `ρ_t`, and checks the
//! centered mirror descent regret decomposition and the stability lemma on the actual run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regret::ComparatorSequence;
use crate::regularizer::RadialRegularizer;
use crate::vector::{KahanSum, Vector};

/// Composite penalty added to the regularizer increment in a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Composite {
    None,
    /// `coef · ‖w‖`
    Norm {
        coef: f64,
    },
}

impl Composite {
    pub fn value(&self, w: &Vector) -> f64 {
        match *self {
            Composite::None => 0.0,
            Composite::Norm { coef } => coef * w.norm(),
        }
    }

    /// Coefficient of `‖w‖`.
    pub fn coef(&self) -> f64 {
        match *self {
            Composite::None => 0.0,
            Composite::Norm { coef } => coef,
        }
    }
}

/// One step `w_{t+1} = argmin ⟨g,w⟩ + D_{ψ_t}(w|w_t) + Δ_t(w) + φ_t(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRound {
    pub w: Vector,
    pub w_next: Vector,
    pub g: Vector,
    pub psi: RadialRegularizer,
    pub psi_next: RadialRegularizer,
    pub composite: Composite,
}

impl TraceRound {
    /// `Δ_t(w) = ψ_{t+1}(w) − ψ_t(w)`.
    pub fn increment(&self, w: &Vector) -> f64 {
        self.psi_next.value(w) - self.psi.value(w)
    }

    /// `δ_t = ⟨g, w_t − w_{t+1}⟩ − D_{ψ_t}(w_{t+1}|w_t) − Δ_t(w_{t+1}) − φ_t(w_{t+1})`.
    pub fn delta(&self) -> Result<f64> {
        let lin = self.g.dot(&self.w) - self.g.dot(&self.w_next);
        Ok(lin
            - self.psi.bregman(&self.w_next, &self.w)?
            - self.increment(&self.w_next)
            - self.composite.value(&self.w_next))
    }

    /// The subgradient of `φ_t` at `w_{t+1}` selected by the first-order optimality condition.
    pub fn composite_subgradient(&self) -> Vector {
        let theta = &self.psi.gradient(&self.w) - &self.g;
        &theta - &self.psi_next.gradient(&self.w_next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongTerms {
    /// `P_t = ⟨∇ψ_t(w_t), u_{t−1} − u_t⟩`, zero for `t = 1`.
    pub p: f64,
    /// `L_t = −D̂_φ(u_t, w_{t+1}, ∇φ_t(w_{t+1}))`; the linear-loss parts vanish.
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundDiagnostics {
    pub t: usize,
    pub delta: f64,
    /// `ρ_t = ⟨∇ψ_{t+1}(w_{t+1}), u_t − u_{t+1}⟩`, zero in the last round.
    pub rho: f64,
    /// `φ_t(u_t)` for the composite part of the penalty.
    pub phi_at_u: f64,
    pub strong: Option<StrongTerms>,
}

fn check_trace(trace: &[TraceRound], us: Option<&ComparatorSequence>) -> Result<()> {
    let first = trace.first().ok_or(Error::Empty("trace"))?;
    let d = first.w.dim();
    for (i, r) in trace.iter().enumerate() {
        r.w_next.check_dim(d)?;
        r.g.check_dim(d)?;
        r.w.check_dim(d)?;
        if let Some(next) = trace.get(i + 1) {
            if next.w != r.w_next {
                return Err(Error::InconsistentTrace(format!(
                    "round {} starts from a different iterate than round {} produced",
                    i + 2,
                    i + 1
                )));
            }
        }
    }
    if let Some(us) = us {
        if us.len() != trace.len() {
            return Err(Error::LengthMismatch {
                what: "comparators",
                expected: trace.len(),
                found: us.len(),
            });
        }
        if us.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: us.dim(),
            });
        }
    }
    Ok(())
}

/// Per-round `δ_t`, and `ρ_t`, `φ_t(u_t)` (plus the strong-lemma terms when `strong`) if
/// comparators are given.
pub fn compute_diagnostics(
    trace: &[TraceRound],
    us: Option<&ComparatorSequence>,
    strong: bool,
) -> Result<Vec<RoundDiagnostics>> {
    check_trace(trace, us)?;
    let n = trace.len();
    let mut out = Vec::with_capacity(n);
    for (i, r) in trace.iter().enumerate() {
        let delta = r.delta()?;
        let (rho, phi_at_u, strong_terms) = match us {
            None => (0.0, 0.0, None),
            Some(us) => {
                let u = &us.points()[i];
                let rho = match us.points().get(i + 1) {
                    Some(u_next) => r.psi_next.gradient(&r.w_next).dot(&(u - u_next)),
                    None => 0.0,
                };
                let st = strong.then(|| {
                    let p = if i == 0 {
                        0.0
                    } else {
                        r.psi.gradient(&r.w).dot(&(&us.points()[i - 1] - u))
                    };
                    let s = r.composite_subgradient();
                    let d_hat = r.composite.value(u)
                        - r.composite.value(&r.w_next)
                        - s.dot(&(u - &r.w_next));
                    StrongTerms { p, l: -d_hat }
                });
                (rho, r.composite.value(u), st)
            }
        };
        out.push(RoundDiagnostics {
            t: i + 1,
            delta,
            rho,
            phi_at_u,
            strong: strong_terms,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteredMdReport {
    pub passed: bool,
    pub regret: f64,
    pub bound: f64,
    pub delta_sum: f64,
    /// First prefix length at which the inequality failed.
    pub first_violation: Option<usize>,
    /// `|R_T − (exact strong-lemma right-hand side)|`.
    pub strong_identity_gap: f64,
    /// `D_{ψ_{T+1}}(u_T|w_{T+1})`, dropped from the bound.
    pub final_divergence: f64,
}

/// Checks `R_T(ū) ≤ ψ_{T+1}(u_T) + Σφ_t(u_t) + Σρ_t + Σδ_t + 1e−8·T` on every prefix of the run,
/// and reports the gap in the exact strong-lemma identity at the full horizon.
pub fn check_centered_md(
    trace: &[TraceRound],
    us: &ComparatorSequence,
) -> Result<CenteredMdReport> {
    let diags = compute_diagnostics(trace, Some(us), true)?;
    let mut regret = KahanSum::default();
    let mut phi = KahanSum::default();
    let mut rho = KahanSum::default();
    let mut delta = KahanSum::default();
    let mut strong = KahanSum::default();
    let mut first_violation = None;
    let mut bound = 0.0;
    for (i, (r, d)) in trace.iter().zip(&diags).enumerate() {
        let u = &us.points()[i];
        regret.add(r.g.dot(&r.w) - r.g.dot(u));
        phi.add(d.phi_at_u);
        delta.add(d.delta);
        let st = d.strong.expect("requested");
        strong.add(st.p + st.l);
        let prefix = (i + 1) as f64;
        bound = r.psi_next.value(u) + phi.value() + rho.value() + delta.value();
        if first_violation.is_none() && regret.value() > bound + 1e-8 * prefix {
            first_violation = Some(i + 1);
        }
        // ρ_t links rounds t and t+1, so it enters the bound from prefix t+1 on.
        rho.add(d.rho);
    }
    let last = trace.last().expect("nonempty");
    let u_last = us.last();
    let final_divergence = last.psi_next.bregman(u_last, &last.w_next)?;
    let exact = last.psi_next.value(u_last) - final_divergence
        + phi.value()
        + strong.value()
        + delta.value();
    Ok(CenteredMdReport {
        passed: first_violation.is_none(),
        regret: regret.value(),
        bound,
        delta_sum: delta.value(),
        first_violation,
        strong_identity_gap: (regret.value() - exact).abs(),
        final_divergence,
    })
}

/// The point `x₀` beyond which the third-derivative condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityPoint {
    Fixed {
        x0: f64,
    },
    /// `x₀ = factor · α_t`
    AlphaMultiple {
        factor: f64,
    },
}

impl StabilityPoint {
    /// `x₀ = α_t(e − 1)`, where `F_t(x₀) = 1`.
    pub fn unit_log() -> Self {
        StabilityPoint::AlphaMultiple {
            factor: std::f64::consts::E - 1.0,
        }
    }

    fn at(&self, psi: &RadialRegularizer) -> f64 {
        match *self {
            StabilityPoint::Fixed { x0 } => x0,
            StabilityPoint::AlphaMultiple { factor } => factor * psi.alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityLemmaReport {
    pub passed: bool,
    pub rounds: usize,
    /// Largest `δ̂_t − bound_t` seen.
    pub worst_excess: f64,
    pub first_violation: Option<usize>,
}

/// Checks `δ̂_t ≤ 2‖g_t‖²/Ψ″_t(x₀) + 1e−10` with
/// `δ̂_t = ⟨g_t, w_t − w_{t+1}⟩ − D_{ψ_t}(w_{t+1}|w_t) − η_t(‖w_{t+1}‖)‖g_t‖²` and `η_t` the
/// antiderivative of the regularizer's local learning rate.
pub fn check_stability_lemma(
    trace: &[TraceRound],
    x0: StabilityPoint,
) -> Result<StabilityLemmaReport> {
    check_trace(trace, None)?;
    let mut worst = f64::NEG_INFINITY;
    let mut first_violation = None;
    for (i, r) in trace.iter().enumerate() {
        let g2 = r.g.norm_sq();
        let delta_hat = r.g.dot(&r.w)
            - r.g.dot(&r.w_next)
            - r.psi.bregman(&r.w_next, &r.w)?
            - r.psi.eta_integral(r.w_next.norm()) * g2;
        let bound = if g2 == 0.0 {
            0.0
        } else {
            2.0 * g2 / r.psi.psi_second(x0.at(&r.psi))
        };
        let excess = delta_hat - bound;
        worst = worst.max(excess);
        if first_violation.is_none() && excess > 1e-10 {
            first_violation = Some(i + 1);
        }
    }
    Ok(StabilityLemmaReport {
        passed: first_violation.is_none(),
        rounds: trace.len(),
        worst_excess: worst,
        first_violation,
    })
}

const BRACKET_DOUBLINGS: usize = 2100;
const BISECTION_STEPS: usize = 400;

/// Independent argmin of `⟨g,w⟩ + D_{ψ_t}(w|w_t) + Δ_t(w) + c‖w‖`.
///
/// Up to constants the objective is `ψ_{t+1}(w) − ⟨θ, w⟩ + c‖w‖` with `θ = ∇ψ_t(w_t) − g`, so
/// the minimizer lies on the ray through `θ`. The radius minimizes the convex function
/// `Ψ_{t+1}(r) − r‖θ‖ + cr`; its derivative `Ψ′_{t+1}(r) + c − ‖θ‖` is bracketed by doubling
/// and then bisected to relative width `1e−15`. Only forward derivatives are evaluated.
pub fn brute_force_update(
    psi: &RadialRegularizer,
    psi_next: &RadialRegularizer,
    composite: Composite,
    w: &Vector,
    g: &Vector,
) -> Result<Vector> {
    w.check_dim(g.dim())?;
    let grad = psi.gradient(w);
    let theta = &grad - g;
    let target = theta.norm() - composite.coef();
    // below this the dual is cancellation noise
    let floor = 1e-12 * (grad.norm() + g.norm());
    if target <= 0.0 || theta.norm() <= floor {
        return Ok(Vector::zeros(w.dim()));
    }
    let slope = |r: f64| psi_next.psi_prime(r) - target;
    let mut hi = psi_next.alpha();
    let mut doublings = 0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Bracketing);
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(theta.with_norm(0.5 * (lo + hi)))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn radial_relative_error(a: &Vector, b: &Vector) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        a.distance(b) / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralLemmaReport {
    pub passed: bool,
    /// `Σ‖g_t‖²/(V_t ln²(V_t/G²))` with `V_t = 4G² + Σ_{s<t}‖g_s‖²`.
    pub log_sum: f64,
    pub log_bound: f64,
    /// `Σ‖g_t‖²/√V_t` with `V_t = Σ_{s≤t}‖g_s‖²`.
    pub sqrt_sum: f64,
    pub sqrt_bound: f64,
}

pub const LEMMA_SLACK: f64 = 1e-9;

pub fn check_integral_lemmas(gs: &[Vector], g_bound: f64) -> Result<IntegralLemmaReport> {
    let g_bound = crate::error::positive("G", g_bound)?;
    let g2 = g_bound * g_bound;
    let mut v_shift = KahanSum::new(4.0 * g2);
    let mut v_incl = KahanSum::default();
    let mut log_sum = KahanSum::default();
    let mut sqrt_sum = KahanSum::default();
    for g in gs {
        let n = g.norm();
        if n > g_bound * (1.0 + 1e-12) {
            return Err(Error::GradientTooLarge {
                norm: n,
                bound: g_bound,
            });
        }
        let n2 = n * n;
        let v = v_shift.value();
        let l = (v / g2).ln();
        log_sum.add(n2 / (v * l * l));
        v_shift.add(n2);
        v_incl.add(n2);
        if n2 > 0.0 {
            sqrt_sum.add(n2 / v_incl.value().sqrt());
        }
    }
    let sqrt_bound = 2.0 * v_incl.value().sqrt();
    let log_bound = 2.0;
    let (log_sum, sqrt_sum) = (log_sum.value(), sqrt_sum.value());
    Ok(IntegralLemmaReport {
        passed: log_sum <= log_bound + LEMMA_SLACK && sqrt_sum <= sqrt_bound + LEMMA_SLACK,
        log_sum,
        log_bound,
        sqrt_sum,
        sqrt_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRatioReport {
    pub passed: bool,
    pub sum: f64,
    pub bound: f64,
}

/// `Σ α̃_t‖g̃_t‖²/√Ṽ_t ≤ 2εh_T + 1e−9·T` for a scale-free run.
pub fn check_range_ratio(
    lemma_sum: f64,
    eps: f64,
    last_hint: f64,
    horizon: usize,
) -> RangeRatioReport {
    let bound = 2.0 * eps * last_hint;
    RangeRatioReport {
        passed: lemma_sum <= bound + LEMMA_SLACK * horizon as f64,
        sum: lemma_sum,
        bound,
    }
}
