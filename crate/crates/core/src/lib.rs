//! Reinforcement-learning agents whose memory is a parametrized unitary.
//!
//! A percept is encoded as a density matrix, transformed by the memory
//! `U(h)`, and measured with a fixed POVM whose outcome is the action.
//! Rewards move the controls `h` along the gradient of `p(a|s)`, with an
//! eligibility trace ("glow") that spreads delayed rewards backwards over
//! earlier decisions.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmath`]: dense complex linear algebra and seeded randomness.
//! * [`memory`]: layered Hamiltonian stacks and analytic gradients.
//! * [`policy`]: percept encodings, POVMs, action sampling.
//! * [`agent`]: the glow agent update rule.
//! * [`baselines`]: tabular PS, SARSA(λ), gradient-ascent RL, tabular
//!   policy gradients.
//! * [`estimators`]: finite-difference and sample-based gradient estimates.
//! * [`environments`]: invasion games and the 3×3 grid world.
//! * [`metrics`]: distances and fidelities between unitaries and channels.
//! * [`runner`]: presets, seeded ensembles, CSV output.
//! * [`navigation`]: post-hoc checks of trained memories.

pub mod agent;
pub mod baselines;
pub mod environments;
pub mod error;
pub mod estimators;
pub mod memory;
pub mod metrics;
pub mod navigation;
pub mod policy;
pub mod qmath;
pub mod runner;

pub use error::{Error, Result};
