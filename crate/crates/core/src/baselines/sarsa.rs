use crate::error::{Error, Result};
use crate::qmath::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Accumulating,
    Replacing,
}

/// Tabular SARSA(λ) action values with eligibility traces.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
    e: Vec<f64>,
    pub alpha: f64,
    pub gamma_disc: f64,
    pub lambda: f64,
    pub trace_kind: TraceKind,
}

impl ValueTable {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        alpha: f64,
        gamma_disc: f64,
        lambda: f64,
        trace_kind: TraceKind,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("table needs at least one state and action"));
        }
        let n = num_states * num_actions;
        Ok(Self {
            num_states,
            num_actions,
            q: vec![0.0; n],
            e: vec![0.0; n],
            alpha,
            gamma_disc,
            lambda,
            trace_kind,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.num_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn traces(&self) -> &[f64] {
        &self.e
    }

    pub fn reset_episode(&mut self) {
        self.e.iter_mut().for_each(|e| *e = 0.0);
    }

    /// `U ← U + α[r + γU′ − U]e` over the whole table, then `e ← γλe`.
    /// `next` is `(s′, a′)`, ignored when `terminal`.
    pub fn sarsa_lambda_update(&mut self, s: usize, a: usize, r: f64, next: (usize, usize), terminal: bool) {
        let idx = s * self.num_actions + a;
        match self.trace_kind {
            TraceKind::Accumulating => self.e[idx] += 1.0,
            TraceKind::Replacing => self.e[idx] = 1.0,
        }
        let u_next = if terminal { 0.0 } else { self.q(next.0, next.1) };
        let delta = r + self.gamma_disc * u_next - self.q[idx];
        let step = self.alpha * delta;
        for (q, e) in self.q.iter_mut().zip(&self.e) {
            *q += step * e;
        }
        let decay = self.gamma_disc * self.lambda;
        self.e.iter_mut().for_each(|e| *e *= decay);
    }

    /// ε-greedy choice; ties broken by lowest action index.
    pub fn epsilon_greedy(&self, s: usize, epsilon: f64, rng: &mut RngStream) -> usize {
        if rng.uniform() < epsilon {
            return rng.index(self.num_actions);
        }
        let row = &self.q[s * self.num_actions..(s + 1) * self.num_actions];
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_sarsa_only_touches_visited_pair() {
        let mut t = ValueTable::new(3, 2, 0.5, 0.9, 0.0, TraceKind::Accumulating).unwrap();
        t.sarsa_lambda_update(0, 1, 1.0, (1, 0), false);
        t.sarsa_lambda_update(1, 0, 1.0, (2, 0), false);
        assert_eq!(t.values(), &[0.0, 0.5, 0.5, 0.0, 0.0, 0.0]);
        assert!(t.traces().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn undiscounted_reduces_to_excitation_form() {
        let mut t = ValueTable::new(1, 1, 0.3, 0.0, 0.7, TraceKind::Replacing).unwrap();
        let mut u = 0.0;
        for r in [1.0, -2.0, 0.5, 4.0] {
            t.sarsa_lambda_update(0, 0, r, (0, 0), false);
            u = (1.0 - 0.3) * u + 0.3 * r;
            assert!((t.q(0, 0) - u).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_hand_iteration() {
        let mut t = ValueTable::new(2, 1, 0.5, 1.0, 0.0, TraceKind::Accumulating).unwrap();
        let expected = [[0.0, 0.5], [0.25, 0.75], [0.5, 0.875]];
        for episode in expected {
            t.reset_episode();
            t.sarsa_lambda_update(0, 0, 0.0, (1, 0), false);
            t.sarsa_lambda_update(1, 0, 1.0, (0, 0), true);
            assert_eq!(t.values(), &episode);
        }
    }

    #[test]
    fn replacing_traces_stay_bounded() {
        let mut t = ValueTable::new(1, 1, 0.1, 1.0, 1.0, TraceKind::Replacing).unwrap();
        for _ in 0..10 {
            t.sarsa_lambda_update(0, 0, 0.0, (0, 0), false);
            assert!(t.traces()[0] >= 0.0 && t.traces()[0] <= 1.0);
        }
    }

    #[test]
    fn greedy_selection() {
        let mut t = ValueTable::new(1, 3, 1.0, 0.0, 0.0, TraceKind::Replacing).unwrap();
        t.sarsa_lambda_update(0, 2, 1.0, (0, 0), true);
        let mut rng = RngStream::new(1, 0);
        assert_eq!(t.epsilon_greedy(0, 0.0, &mut rng), 2);
    }
}
