//! Tabular stochastic primal-dual Q-learning.
//!
//! The crate is organized around the linear-programming view of a finite
//! discounted MDP:
//!
//! * [`mdp`] holds models, policies, exact policy evaluation and sampling.
//! * [`oracle`] computes the exact primal and dual solutions, evaluates the
//!   Lagrangians and the pseudo duality gap.
//! * [`schedule`] describes the time-varying state-action distribution seen
//!   by an off-policy learner and its mixing diagnostics.
//! * [`spdq`] is the stochastic primal-dual Q-learning loop itself.
//! * [`baselines`] contains tabular Q-learning, a corrected primal-dual
//!   learner on the value-function LP and the deterministic full-gradient
//!   iteration.
//! * [`harness`] runs configured experiments and writes CSV traces.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod schedule;
pub mod spdq;

pub use error::{Error, Result};
pub use mdp::{MdpModel, SaTable};
