use crate::error::{Error, Result};
use crate::policy::sample_action;
use crate::qmath::RngStream;

/// Map from edge strengths to unnormalized action weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// `Π(h) = h`.
    Linear,
    /// `Π(h) = exp(h)`.
    Softmax,
}

impl PolicyKind {
    pub fn weight(self, h: f64) -> f64 {
        match self {
            PolicyKind::Linear => h,
            PolicyKind::Softmax => h.exp(),
        }
    }

    pub fn derivative(self, h: f64) -> f64 {
        match self {
            PolicyKind::Linear => 1.0,
            PolicyKind::Softmax => h.exp(),
        }
    }
}

/// Edge strengths and glow of a two-layer projective-simulation network.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    num_states: usize,
    num_actions: usize,
    h: Vec<f64>,
    g: Vec<f64>,
    pub gamma_damp: f64,
    pub h_eq: f64,
    pub eta: f64,
    pub policy: PolicyKind,
}

impl EdgeTable {
    /// All edges start at `h_eq` with zero glow.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        gamma_damp: f64,
        h_eq: f64,
        eta: f64,
        policy: PolicyKind,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("table needs at least one state and action"));
        }
        if !(0.0..=1.0).contains(&gamma_damp) || !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid("damping and glow rates must lie in [0, 1]"));
        }
        let n = num_states * num_actions;
        Ok(Self {
            num_states,
            num_actions,
            h: vec![h_eq; n],
            g: vec![0.0; n],
            gamma_damp,
            h_eq,
            eta,
            policy,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn h(&self, s: usize, a: usize) -> f64 {
        self.h[s * self.num_actions + a]
    }

    pub fn set_h(&mut self, s: usize, a: usize, value: f64) {
        self.h[s * self.num_actions + a] = value;
    }

    pub fn glow(&self, s: usize, a: usize) -> f64 {
        self.g[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.h[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn strengths(&self) -> &[f64] {
        &self.h
    }

    /// Visit `(s, a)`, then damp and excite every edge with reward `lambda`.
    pub fn ps_update(&mut self, s: usize, a: usize, lambda: f64) {
        let idx = s * self.num_actions + a;
        self.g[idx] = 1.0;
        let (gamma, h_eq) = (self.gamma_damp, self.h_eq);
        for (h, g) in self.h.iter_mut().zip(&self.g) {
            *h = (1.0 - gamma) * *h + lambda * g + gamma * h_eq;
        }
        let keep = 1.0 - self.eta;
        self.g.iter_mut().for_each(|g| *g *= keep);
    }

    pub fn reset_glow(&mut self) {
        self.g.iter_mut().for_each(|g| *g = 0.0);
    }

    /// `p(a|s) = Π(h_sa) / Σ_b Π(h_sb)`.
    pub fn ps_policy(&self, s: usize) -> Result<Vec<f64>> {
        row_policy(self.row(s), self.policy)
    }

    pub fn act(&self, s: usize, rng: &mut RngStream) -> Result<usize> {
        Ok(sample_action(&self.ps_policy(s)?, rng))
    }
}

/// Normalized policy of one table row.
pub fn row_policy(row: &[f64], kind: PolicyKind) -> Result<Vec<f64>> {
    let weights: Vec<f64> = match kind {
        PolicyKind::Linear => row.to_vec(),
        PolicyKind::Softmax => {
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter().map(|h| (h - top).exp()).collect()
        }
    };
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::Degenerate("linear policy row has a negative strength".into()));
    }
    let c: f64 = weights.iter().sum();
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Degenerate(format!("policy row has normalization {c}")));
    }
    Ok(weights.iter().map(|w| w / c).collect())
}
