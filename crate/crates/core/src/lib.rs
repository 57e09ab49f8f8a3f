//! Centered mirror descent for unconstrained online linear optimization.
//!
//! Every learner here is an instance of the update
//!
//! ```text
//! w_{t+1} = argmin_w ⟨g_t, w⟩ + D_{ψ_t}(w | w_t) + Δ_t(w) + φ_t(w),    Δ_t = ψ_{t+1} − ψ_t,
//! ```
//!
//! with a radial regularizer `ψ_t(w) = Ψ_t(‖w‖)` built on `ln(1 + x/α_t)`. Because `Δ_t`
//! recentres the step at the origin, each update has a closed form in the dual vector.
//!
//! * [`pf_static::PfStatic`]: parameter-free static regret.
//! * [`dynamic::DynamicLearner`]: dynamic regret against moving comparators.
//! * [`scale_free::ScaleFree`]: no Lipschitz bound needed, invariant to gradient rescaling.
//! * [`implicit::ImplicitOptimistic`]: optimistic steps driven by hints about the next loss.
//! * [`reductions`]: lazy interval updates and the magnitude/direction decomposition.
//! * [`adversaries`]: gradient generators and lower-bound constructions.
//! * [`verification`]: recomputes proof terms on concrete runs and provides brute-force oracles.

pub mod adversaries;
pub mod dynamic;
pub mod error;
pub mod implicit;
pub mod pf_static;
pub mod reductions;
pub mod regret;
pub mod regularizer;
pub mod scale_free;
pub mod special;
pub mod vector;
pub mod verification;

pub use error::{Error, Result};
pub use regret::{
    compute_regret, path_length, ComparatorSequence, GradientRound, Learner, RegretLedger,
};
pub use regularizer::RadialRegularizer;
pub use vector::{KahanSum, Vector};
