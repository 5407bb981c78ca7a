//! Softmax / log-sum-exp operator toolkit.
//!
//! The crate is organised around the softmax map `σ(z) = ∇lse(z)` and the
//! learning dynamics it induces in matrix games:
//!
//! * [`softmax`]: stable evaluation of `lse`, `σ`, its Jacobian, negative
//!   entropy and the Gumbel stochastic-choice sampler.
//! * [`properties`]: sampled verifiers for operator properties (monotonicity,
//!   Lipschitz continuity, co-coercivity, conjugate duality, ...).
//! * [`games`]: matrix games on the simplex.
//! * [`dynamics`]: RK4 integration of the exponentially-discounted score
//!   dynamics `ż = U(σ(z)) − z` with Lyapunov diagnostics.
//! * [`equilibrium`]: damped fixed-point solver for logit equilibria.
//! * [`io`]: game files, trajectory CSV and result JSON.

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod games;
pub mod io;
pub mod properties;
pub mod softmax;

pub use error::{Error, Result};
pub use games::MatrixGame;
pub use softmax::{
    GeneralizedTemperature, JacobianMatrix, MixedStrategy, ScoreVector, Temperature,
};
