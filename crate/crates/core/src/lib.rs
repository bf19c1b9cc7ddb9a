//! Performance-engineered MCMC building blocks.
//!
//! * [`glm`]: logistic-regression log-likelihood and gradient under several
//!   execution strategies, plus a differential-update workspace.
//! * [`sampler`]: slice-within-Gibbs for Bayesian logistic regression.
//! * [`hb`]: hierarchical logistic regression with coarse or fine worker mapping.
//! * [`ising`]: checkerboard Gibbs sampling of a square-lattice Ising model.
//! * [`rng`]: counter-based streams, batch deviate buffers, Gamma and Dirichlet.
//! * [`perf`]: roofline bounds and the CPR benchmark grid.
//!
//! With the default `parallel` feature the row-parallel regions run on a
//! rayon pool sized by [`glm::ExecPlan::workers`]. Without it every region
//! runs its blocks in order on the calling thread. Block boundaries and merge
//! order are identical in both builds, so outputs are bit-identical.

pub mod error;
pub mod exec;
pub mod glm;
pub mod hb;
pub mod ising;
pub mod perf;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
