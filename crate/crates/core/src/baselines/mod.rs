//! Classical comparison learners: projective simulation (PS), tabular
//! SARSA(λ), its gradient-ascent generalization, the tabular policy
//! gradient, and an unlearning random walk.

pub mod gradient_rl;
pub mod ps;
pub mod sarsa;
pub mod tabular_pg;

pub use gradient_rl::gradient_rl_update;
pub use ps::{row_policy, EdgeTable, PolicyKind};
pub use sarsa::{TraceKind, ValueTable};
pub use tabular_pg::{policy_table, tabular_pg_trace};

/// Uniform distribution over `num_actions`.
pub fn random_walk_policy(num_actions: usize) -> Vec<f64> {
    vec![1.0 / num_actions as f64; num_actions]
}
