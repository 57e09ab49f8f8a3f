//! Scale-free, Lipschitz-adaptive learner.
//!
//! Gradients are clipped to the running hint `h_t = max_{s<t}‖g_s‖`, plays are projected onto
//! the ball of radius `D_t = √(Σ_{s<t}‖g_s‖/G_s)`, and an inner parameter-free learner runs
//! on the surrogate gradients `g̃_t` with the range-ratio accounting
//! `b̃_{t+1} = b̃_t + ‖g̃_t‖²/h_t²`, `B̃_{t+1} = B̃_t + 4b̃_{t+1}`, `α̃_t = ε/(√B̃_t ln²B̃_t)`.

use crate::error::{nonnegative, positive, Result};
use crate::pf_static::{check_k, finite_iterate};
use crate::regret::Learner;
use crate::regularizer::RadialRegularizer;
use crate::vector::{KahanSum, Vector};
use crate::verification::{Composite, TraceRound};

/// `w · min(1, D/‖w‖)`
pub fn sf_project(w: &Vector, d: f64) -> Result<Vector> {
    let d = nonnegative("D", d)?;
    let n = w.norm();
    Ok(if n > d { w.with_norm(d) } else { w.clone() })
}

/// `g · min(1, h/‖g‖)`
pub fn sf_clip(g: &Vector, h: f64) -> Vector {
    let n = g.norm();
    if n > h {
        g.with_norm(h)
    } else {
        g.clone()
    }
}

/// A subgradient of `½⟨ḡ, w⟩ + ½‖ḡ‖ max(0, ‖w‖ − D)` at `w`; the hinge is inactive at `‖w‖ = D`.
pub fn sf_surrogate_grad(w: &Vector, g_bar: &Vector, d: f64) -> Vector {
    let half = g_bar.scaled(0.5);
    if w.norm() > d {
        half.axpy(0.5, &w.with_norm(g_bar.norm()))
    } else {
        half
    }
}

fn range_alpha(eps: f64, b: f64) -> f64 {
    let l = b.ln();
    eps / (b.sqrt() * l * l)
}

/// Quantities produced by one scale-free round.
#[derive(Debug, Clone)]
pub struct ScaleFreeRound {
    pub play: Vector,
    pub g_tilde: Vector,
    /// `α̃_t‖g̃_t‖²/√Ṽ_t`, the summand of the range-ratio lemma.
    pub lemma_term: f64,
    /// The inner centered-mirror-descent step, present once a nonzero hint exists.
    pub inner: Option<TraceRound>,
}

#[derive(Debug, Clone)]
pub struct ScaleFree {
    eps: f64,
    k: f64,
    t: usize,
    w: Vector,
    theta: Vector,
    h: f64,
    h_prev: f64,
    g_run: f64,
    sq_tilde: KahanSum,
    b_tilde: KahanSum,
    big_b: KahanSum,
    alpha: f64,
    ratio_sum: KahanSum,
    lemma_sum: KahanSum,
}

impl ScaleFree {
    pub fn new(eps: f64, k: f64, dim: usize) -> Result<Self> {
        let eps = positive("eps", eps)?;
        let k = check_k(k, false)?;
        if dim == 0 {
            return Err(crate::Error::Empty("dimension"));
        }
        Ok(Self {
            eps,
            k,
            t: 1,
            w: Vector::zeros(dim),
            theta: Vector::zeros(dim),
            h: 0.0,
            h_prev: 0.0,
            g_run: 0.0,
            sq_tilde: KahanSum::default(),
            b_tilde: KahanSum::new(4.0),
            big_b: KahanSum::new(16.0),
            alpha: range_alpha(eps, 16.0),
            ratio_sum: KahanSum::default(),
            lemma_sum: KahanSum::default(),
        })
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Unprojected inner iterate `w_t`.
    pub fn iterate(&self) -> &Vector {
        &self.w
    }

    /// Current hint `h_t`.
    pub fn hint(&self) -> f64 {
        self.h
    }

    /// `G_t`, the largest gradient norm so far.
    pub fn running_max(&self) -> f64 {
        self.g_run
    }

    pub fn v_tilde(&self) -> f64 {
        4.0 * self.h * self.h + self.sq_tilde.value()
    }

    pub fn b_tilde(&self) -> f64 {
        self.b_tilde.value()
    }

    pub fn big_b_tilde(&self) -> f64 {
        self.big_b.value()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Projection radius `D_t`.
    pub fn radius(&self) -> f64 {
        self.ratio_sum.value().sqrt()
    }

    /// `Σ‖g_s‖/G_s` over processed rounds.
    pub fn ratio_sum(&self) -> f64 {
        self.ratio_sum.value()
    }

    /// Running `Σ α̃_t‖g̃_t‖²/√Ṽ_t`.
    pub fn lemma_sum(&self) -> f64 {
        self.lemma_sum.value()
    }

    /// Hint of the last processed round, `h_T`.
    pub fn last_hint(&self) -> f64 {
        self.h_prev
    }

    /// Inner regularizer `ψ_t`, defined once the hint is positive.
    pub fn regularizer(&self) -> Option<RadialRegularizer> {
        (self.h > 0.0).then(|| {
            RadialRegularizer::capped(self.k, self.alpha, self.v_tilde(), 1.0 / self.h)
                .expect("positive parameters")
        })
    }

    pub fn step(&mut self, g: &Vector) -> Result<ScaleFreeRound> {
        g.check_dim(self.w.dim())?;
        if !g.is_finite() {
            return Err(crate::Error::NonFinite("gradient"));
        }
        let d = self.radius();
        let play = sf_project(&self.w, d)?;
        let gn = g.norm();
        let g_bar = sf_clip(g, self.h);
        let g_run = gn.max(self.g_run);
        let h_next = g_run;
        let g_tilde = sf_surrogate_grad(&self.w, &g_bar, d);
        let gt2 = g_tilde.norm_sq();

        let v_t = self.v_tilde();
        let lemma_term = if v_t > 0.0 {
            self.alpha * gt2 / v_t.sqrt()
        } else {
            0.0
        };

        let psi = self.regularizer();
        let mut theta = self.theta.clone();
        theta.sub_assign(&g_tilde);
        let mut sq_tilde = self.sq_tilde;
        sq_tilde.add(gt2);
        let mut b_tilde = self.b_tilde;
        if self.h > 0.0 {
            b_tilde.add(gt2 / (self.h * self.h));
        }
        let mut big_b = self.big_b;
        big_b.add(4.0 * b_tilde.value());
        let alpha_next = range_alpha(self.eps, big_b.value());
        let v_next = 4.0 * h_next * h_next + sq_tilde.value();

        let psi_next = (h_next > 0.0).then(|| {
            RadialRegularizer::capped(self.k, alpha_next, v_next, 1.0 / h_next)
                .expect("positive parameters")
        });
        let w_next = match psi_next {
            Some(p) if theta.norm() > 1e-12 * h_next => finite_iterate(p.gradient_inverse(&theta))?,
            _ => Vector::zeros(theta.dim()),
        };

        let inner = psi_next.map(|p| TraceRound {
            w: self.w.clone(),
            w_next: w_next.clone(),
            g: g_tilde.clone(),
            // w_t = 0 whenever h_t = 0, so ∇ψ_t(w_t) = 0 for any placeholder ψ_t.
            psi: psi.unwrap_or(p),
            psi_next: p,
            composite: Composite::None,
        });

        if g_run > 0.0 {
            self.ratio_sum.add(gn / g_run);
        }
        self.lemma_sum.add(lemma_term);
        self.theta = theta;
        self.sq_tilde = sq_tilde;
        self.b_tilde = b_tilde;
        self.big_b = big_b;
        self.alpha = alpha_next;
        self.h_prev = self.h;
        self.h = h_next;
        self.g_run = g_run;
        self.w = w_next;
        self.t += 1;

        Ok(ScaleFreeRound {
            play,
            g_tilde,
            lemma_term,
            inner,
        })
    }

    /// Order-of-growth bound `4εh_T + 2k‖u‖max{√(Ṽ L), G_T L} + G_T(‖u‖³ + ‖u‖) + G_T√(Σ‖g_t‖/G_t)`
    /// with `L = ln(‖u‖/α̃_{T+1} + 1)`; hidden constants are set to one.
    pub fn bound_rhs(&self, u: &Vector) -> f64 {
        let un = u.norm();
        let l = (un / self.alpha).ln_1p();
        let gt = self.g_run;
        4.0 * self.eps * self.h_prev
            + 2.0 * self.k * un * (self.v_tilde() * l).sqrt().max(gt * l)
            + gt * (un * un * un + un)
            + gt * self.ratio_sum().sqrt()
    }
}

impl Learner for ScaleFree {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn play(&self) -> Vector {
        sf_project(&self.w, self.radius()).expect("radius is nonnegative")
    }

    fn update(&mut self, g: &Vector) -> Result<()> {
        self.step(g).map(|_| ())
    }
}
