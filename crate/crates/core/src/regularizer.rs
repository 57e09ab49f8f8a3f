//! Time-varying radial regularizers `ψ(w) = Ψ(‖w‖)` built on `F(x) = ln(1 + x/α)`.
//!
//! Two shapes are supported:
//!
//! * [`Shape::CappedMin`]: `Ψ′(x) = k · min_{η ≤ η_cap} [F(x)/η + ηV]`, evaluated in its
//!   two-branch closed form (square-root branch while `G√F ≤ √V`, linear branch after,
//!   with `G = 1/η_cap`).
//! * [`Shape::FixedEta`]: `Ψ′(x) = 2F(x)/η`.
//!
//! All radial functions take `x ≥ 0` and panic on negative or NaN input; radii come
//! from norms, so a negative radius is a caller bug rather than a recoverable error.

use serde::Serialize;

use crate::error::{positive, Error, Result};
use crate::special::{xlog1p_minus, y_minus_dawson};
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Shape {
    CappedMin { k: f64, v: f64, eta_cap: f64 },
    FixedEta { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialRegularizer {
    alpha: f64,
    shape: Shape,
}

fn check_radius(x: f64) {
    assert!(x >= 0.0, "radial argument must be nonnegative, got {x}");
}

impl RadialRegularizer {
    pub fn capped(k: f64, alpha: f64, v: f64, eta_cap: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            shape: Shape::CappedMin {
                k: positive("k", k)?,
                v: positive("V", v)?,
                eta_cap: positive("eta_cap", eta_cap)?,
            },
        })
    }

    pub fn fixed_eta(alpha: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            shape: Shape::FixedEta {
                eta: positive("eta", eta)?,
            },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// `F(x) = ln(1 + x/α)`.
    pub fn log_ratio(&self, x: f64) -> f64 {
        (x / self.alpha).ln_1p()
    }

    // Square-root branch test `G√F ≤ √V`; ties go to the square-root branch.
    fn in_sqrt_branch(f: f64, v: f64, eta_cap: f64) -> bool {
        f.sqrt() / eta_cap <= v.sqrt()
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        check_radius(x);
        let f = self.log_ratio(x);
        match self.shape {
            Shape::CappedMin { k, v, eta_cap } => {
                let g = 1.0 / eta_cap;
                if Self::in_sqrt_branch(f, v, eta_cap) {
                    2.0 * k * (v * f).sqrt()
                } else {
                    k * g * f + k * v / g
                }
            }
            Shape::FixedEta { eta } => 2.0 * f / eta,
        }
    }

    pub fn psi_second(&self, x: f64) -> f64 {
        check_radius(x);
        let f = self.log_ratio(x);
        let xa = x + self.alpha;
        match self.shape {
            Shape::CappedMin { k, v, eta_cap } => {
                if Self::in_sqrt_branch(f, v, eta_cap) {
                    k * v.sqrt() / (xa * f.sqrt())
                } else {
                    k / (eta_cap * xa)
                }
            }
            Shape::FixedEta { eta } => 2.0 / (eta * xa),
        }
    }

    pub fn psi_third(&self, x: f64) -> f64 {
        check_radius(x);
        let f = self.log_ratio(x);
        let xa = x + self.alpha;
        match self.shape {
            Shape::CappedMin { k, v, eta_cap } => {
                if Self::in_sqrt_branch(f, v, eta_cap) {
                    -k * v.sqrt() * (1.0 + 2.0 * f) / (2.0 * xa * xa * f.powf(1.5))
                } else {
                    -k / (eta_cap * xa * xa)
                }
            }
            Shape::FixedEta { eta } => -2.0 / (eta * xa * xa),
        }
    }

    /// The `x ≥ 0` with `Ψ′(x) = r`.
    pub fn psi_prime_inverse(&self, r: f64) -> f64 {
        check_radius(r);
        let exponent = match self.shape {
            Shape::CappedMin { k, v, eta_cap } => {
                if r <= 2.0 * k * v * eta_cap {
                    r * r / (4.0 * k * k * v)
                } else {
                    r * eta_cap / k - v * eta_cap * eta_cap
                }
            }
            Shape::FixedEta { eta } => eta * r / 2.0,
        };
        self.alpha * exponent.exp_m1()
    }

    /// `Ψ(x) = ∫_0^x Ψ′(z) dz`.
    ///
    /// The square-root branch integrates to `2k√V (x+α)(√F − D(√F))` with `D` Dawson's
    /// integral; the linear branch uses `∫_0^x F = α[(1+y)ln(1+y) − y]`, `y = x/α`.
    pub fn psi_value(&self, x: f64) -> f64 {
        check_radius(x);
        let a = self.alpha;
        match self.shape {
            Shape::CappedMin { k, v, eta_cap } => {
                let g = 1.0 / eta_cap;
                let f = self.log_ratio(x);
                if Self::in_sqrt_branch(f, v, eta_cap) {
                    2.0 * k * v.sqrt() * (x + a) * y_minus_dawson(f.sqrt())
                } else {
                    let s_star = v * eta_cap * eta_cap;
                    let x_star = a * s_star.exp_m1();
                    let head = 2.0 * k * v.sqrt() * (x_star + a) * y_minus_dawson(s_star.sqrt());
                    let lin = a * (xlog1p_minus(x / a) - xlog1p_minus(x_star / a));
                    head + k * g * lin + k * v / g * (x - x_star)
                }
            }
            Shape::FixedEta { eta } => 2.0 / eta * a * xlog1p_minus(x / a),
        }
    }

    /// Local learning rate `η′(x)`: `min(√(F(x)/V), η_cap)` or the fixed `η`.
    pub fn eta_prime(&self, x: f64) -> f64 {
        check_radius(x);
        match self.shape {
            Shape::CappedMin { v, eta_cap, .. } => (self.log_ratio(x) / v).sqrt().min(eta_cap),
            Shape::FixedEta { eta } => eta,
        }
    }

    /// `η(x) = ∫_0^x η′(z) dz`, by its piecewise antiderivative.
    pub fn eta_integral(&self, x: f64) -> f64 {
        check_radius(x);
        let a = self.alpha;
        match self.shape {
            Shape::CappedMin { v, eta_cap, .. } => {
                let f = self.log_ratio(x);
                if Self::in_sqrt_branch(f, v, eta_cap) {
                    (x + a) * y_minus_dawson(f.sqrt()) / v.sqrt()
                } else {
                    let s_star = v * eta_cap * eta_cap;
                    let x_star = a * s_star.exp_m1();
                    (x_star + a) * y_minus_dawson(s_star.sqrt()) / v.sqrt() + eta_cap * (x - x_star)
                }
            }
            Shape::FixedEta { eta } => eta * x,
        }
    }

    pub fn value(&self, w: &Vector) -> f64 {
        self.psi_value(w.norm())
    }

    /// `∇ψ(w) = (w/‖w‖) Ψ′(‖w‖)`, zero at the origin.
    pub fn gradient(&self, w: &Vector) -> Vector {
        w.with_norm(self.psi_prime(w.norm()))
    }

    /// The point whose gradient is `theta`: `(θ/‖θ‖) (Ψ′)⁻¹(‖θ‖)`.
    pub fn gradient_inverse(&self, theta: &Vector) -> Vector {
        theta.with_norm(self.psi_prime_inverse(theta.norm()))
    }

    /// `D_ψ(w|v) = ψ(w) − ψ(v) − ⟨∇ψ(v), w − v⟩`.
    pub fn bregman(&self, w: &Vector, v: &Vector) -> Result<f64> {
        w.check_dim(v.dim())?;
        let grad = self.gradient(v);
        Ok(self.value(w) - self.value(v) - grad.dot(&(w - v)))
    }

    /// Checks the stability-lemma conditions on `grid`: `Ψ′ ≥ 0`, `Ψ″ ≥ 0`, `Ψ‴ ≤ 0`
    /// everywhere and `|Ψ‴| ≤ (η′/2)Ψ″²` for grid points above `x0`.
    pub fn check_stability_conditions(
        &self,
        x0: f64,
        grid: &[f64],
    ) -> Result<StabilityConditionsReport> {
        let mut report = StabilityConditionsReport {
            passed: true,
            points_checked: 0,
            first_violation: None,
        };
        for &x in grid {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "grid point",
                    requirement: "finite and positive",
                    value: x,
                });
            }
            report.points_checked += 1;
            let d1 = self.psi_prime(x);
            let d2 = self.psi_second(x);
            let d3 = self.psi_third(x);
            let failed = if d1 < 0.0 {
                Some("psi' < 0")
            } else if d2 < 0.0 {
                Some("psi'' < 0")
            } else if d3 > 0.0 {
                Some("psi''' > 0")
            } else if x > x0 && -d3 > 0.5 * self.eta_prime(x) * d2 * d2 * (1.0 + 1e-12) {
                Some("|psi'''| > (eta'/2) psi''^2")
            } else {
                None
            };
            if let Some(which) = failed {
                report.passed = false;
                report.first_violation = Some(StabilityViolation {
                    x,
                    condition: which.to_string(),
                });
                break;
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityViolation {
    pub x: f64,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConditionsReport {
    pub passed: bool,
    pub points_checked: usize,
    pub first_violation: Option<StabilityViolation>,
}

/// Log-spaced grid of `n ≥ 2` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn thm_params() -> RadialRegularizer {
        let alpha = 1.0 / (5f64.sqrt() * 5f64.ln().powi(2));
        RadialRegularizer::capped(3.0, alpha, 5.0, 1.0).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn psi_prime_examples() {
        let psi = thm_params();
        assert_eq!(psi.psi_prime(0.0), 0.0);
        assert_relative_eq!(
            psi.psi_prime(psi.alpha() * (E - 1.0)),
            6.0 * 5f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            psi.psi_prime(psi.alpha() * (E - 1.0)),
            13.416_407_864_998_74,
            max_relative = 1e-12
        );
        let fixed = RadialRegularizer::fixed_eta(1.0, 1.0).unwrap();
        assert_eq!(fixed.psi_prime(0.0), 0.0);
    }

    #[test]
    fn psi_prime_inverse_example() {
        let psi = thm_params();
        assert_eq!(psi.psi_prime_inverse(0.0), 0.0);
        let x = psi.psi_prime_inverse(1.0);
        assert_relative_eq!(
            x,
            psi.alpha() * (1.0f64 / 180.0).exp_m1(),
            max_relative = 1e-12
        );
        assert_relative_eq!(x, 9.618_4e-4, max_relative = 1e-4);
        assert_relative_eq!(psi.psi_prime(x), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn linear_branch_round_trip() {
        let psi = thm_params();
        // 2kV·eta_cap = 30 is the branch switch in the dual
        for r in [29.9, 30.0, 30.1, 100.0, 1e3] {
            assert_relative_eq!(
                psi.psi_prime(psi.psi_prime_inverse(r)),
                r,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn psi_value_examples() {
        let fixed = RadialRegularizer::fixed_eta(1.0, 1.0).unwrap();
        assert_eq!(fixed.psi_value(0.0), 0.0);
        assert_relative_eq!(fixed.psi_value(E - 1.0), 2.0, max_relative = 1e-14);

        let psi = thm_params();
        assert_eq!(psi.psi_value(0.0), 0.0);
        let quad = simpson(|x| psi.psi_prime(x), 0.0, 1.0, 200_000);
        assert_relative_eq!(psi.psi_value(1.0), quad, max_relative = 1e-8);
        // past the branch switch
        let far = 1e3;
        let quad_far = simpson(|x| psi.psi_prime(x), 0.0, far, 2_000_000);
        assert_relative_eq!(psi.psi_value(far), quad_far, max_relative = 1e-8);
    }

    #[test]
    fn eta_integral_matches_quadrature() {
        let psi = thm_params();
        for x in [0.01, 1.0, 50.0] {
            let quad = simpson(|s| psi.eta_prime(s), 0.0, x, 400_000);
            assert_relative_eq!(psi.eta_integral(x), quad, max_relative = 1e-7);
        }
        let fixed = RadialRegularizer::fixed_eta(0.5, 0.25).unwrap();
        assert_relative_eq!(fixed.eta_integral(3.0), 0.75, max_relative = 1e-14);
    }

    #[test]
    fn bregman_examples() {
        let psi = thm_params();
        let w = Vector::new(vec![0.3, -0.4]).unwrap();
        assert!(psi.bregman(&w, &w).unwrap().abs() < 1e-15);
        assert_relative_eq!(
            psi.bregman(&w, &Vector::zeros(2)).unwrap(),
            psi.value(&w),
            max_relative = 1e-14
        );
        assert!(psi.bregman(&w, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn bregman_matches_finite_differences() {
        let psi = thm_params();
        let w = Vector::new(vec![0.7, 0.2]).unwrap();
        let v = Vector::new(vec![-0.1, 0.5]).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..2)
            .map(|i| {
                let e = Vector::basis(2, i).scaled(h);
                (psi.value(&(&v + &e)) - psi.value(&(&v - &e))) / (2.0 * h)
            })
            .collect();
        let lin = fd[0] * (w[0] - v[0]) + fd[1] * (w[1] - v[1]);
        let d = psi.value(&w) - psi.value(&v) - lin;
        assert!(d >= 0.0);
        assert!((psi.bregman(&w, &v).unwrap() - d).abs() < 1e-6);
    }

    #[test]
    fn stability_conditions() {
        let psi = thm_params();
        let x0 = psi.alpha() * (E - 1.0);
        let grid = log_grid(x0 * 1.01, 1e6, 2000);
        assert!(psi.check_stability_conditions(x0, &grid).unwrap().passed);

        let fixed = RadialRegularizer::fixed_eta(0.3, 0.5).unwrap();
        let rep = fixed
            .check_stability_conditions(0.0, &log_grid(1e-9, 1e6, 2000))
            .unwrap();
        assert!(rep.passed, "{rep:?}");

        let k1 = RadialRegularizer::capped(1.0, psi.alpha(), 5.0, 1.0).unwrap();
        let rep = k1.check_stability_conditions(x0, &grid).unwrap();
        assert!(!rep.passed);
        assert!(rep.first_violation.is_some());

        assert!(psi.check_stability_conditions(x0, &[0.0]).is_err());
    }

    #[test]
    #[should_panic(expected = "nonnegative")]
    fn negative_radius_panics() {
        thm_params().psi_prime(-1.0);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(RadialRegularizer::capped(3.0, 0.0, 5.0, 1.0).is_err());
        assert!(RadialRegularizer::capped(3.0, 1.0, -5.0, 1.0).is_err());
        assert!(RadialRegularizer::fixed_eta(1.0, f64::NAN).is_err());
    }
}
