//! The glow agent.
//!
//! Each cycle the agent measures `U(h) ρ(s) U(h)†`, records the gradient of
//! the probability of the outcome it obtained, and folds it into a decaying
//! eligibility trace:
//!
//! ```text
//! e ← (1 − η) e + ∇p(a|s)
//! h ← h + α r e + κ (h∞ − h)
//! ```
//!
//! With `η = 1` this is plain stochastic gradient ascent on `p(a|s)` weighted
//! by reward; smaller `η` lets a delayed reward reinforce earlier decisions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::GradientMode;
use crate::memory::{ControlVector, ForwardPass, HamiltonianStack};
use crate::policy::{distribution_from_pass, sample_action, PovmSet};
use crate::qmath::{DensityMatrix, RngStream};

/// Hyperparameters of the update rule.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlowParams {
    pub alpha: f64,
    pub eta: f64,
    #[serde(default)]
    pub kappa: f64,
}

impl GlowParams {
    pub fn new(alpha: f64, eta: f64) -> Self {
        Self { alpha, eta, kappa: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha = {} must be finite and >= 0", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta = {} outside [0, 1]", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::invalid(format!("kappa = {} outside [0, 1]", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct CachedPass {
    pass: ForwardPass,
    dist: Vec<f64>,
    grads: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct GlowAgent {
    stack: Arc<HamiltonianStack>,
    h: ControlVector,
    e: Vec<f64>,
    h_inf: ControlVector,
    params: GlowParams,
    /// Passes at the current `h`, by percept label. Cleared when `h` moves.
    cache: Vec<Option<CachedPass>>,
}

impl GlowAgent {
    /// Starts at `h = 0`, which is also the relaxation target.
    pub fn new(stack: Arc<HamiltonianStack>, params: GlowParams) -> Result<Self> {
        params.validate()?;
        let n = stack.len();
        Ok(Self {
            stack,
            h: ControlVector::zeros(n),
            e: vec![0.0; n],
            h_inf: ControlVector::zeros(n),
            params,
            cache: Vec::new(),
        })
    }

    pub fn with_equilibrium(mut self, h_inf: ControlVector) -> Result<Self> {
        if h_inf.len() != self.h.len() {
            return Err(Error::invalid("equilibrium controls have the wrong length"));
        }
        self.h_inf = h_inf;
        Ok(self)
    }

    pub fn with_controls(mut self, h: ControlVector) -> Result<Self> {
        if h.len() != self.h.len() {
            return Err(Error::invalid("controls have the wrong length"));
        }
        self.h = h;
        self.cache.clear();
        Ok(self)
    }

    pub fn stack(&self) -> &HamiltonianStack {
        &self.stack
    }

    pub fn controls(&self) -> &ControlVector {
        &self.h
    }

    pub fn trace(&self) -> &[f64] {
        &self.e
    }

    pub fn params(&self) -> GlowParams {
        self.params
    }

    /// `e ← (1 − η) e + grad`.
    pub fn observe_gradient(&mut self, grad: &[f64]) -> Result<()> {
        if grad.len() != self.e.len() {
            return Err(Error::invalid(format!(
                "gradient has length {}, expected {}",
                grad.len(),
                self.e.len()
            )));
        }
        let keep = 1.0 - self.params.eta;
        for (e, g) in self.e.iter_mut().zip(grad) {
            *e = keep * *e + g;
        }
        Ok(())
    }

    /// `h ← h + α r e + κ (h∞ − h)`.
    pub fn apply_reward(&mut self, r: f64) {
        let GlowParams { alpha, kappa, .. } = self.params;
        let scale = alpha * r;
        if scale == 0.0 && kappa == 0.0 {
            return;
        }
        self.cache.clear();
        for ((h, e), h_inf) in self.h.iter_mut().zip(&self.e).zip(self.h_inf.iter()) {
            let relax = if kappa == 0.0 { 0.0 } else { kappa * (h_inf - *h) };
            *h += scale * e + relax;
        }
    }

    /// Action distribution at the current controls, without side effects.
    pub fn distribution(&self, rho: &DensityMatrix, povm: &PovmSet) -> Result<Vec<f64>> {
        let pass = self.stack.forward(&self.h, rho)?;
        distribution_from_pass(&pass, povm)
    }

    /// Measure, sample an action, and fold `∇p(a|s)` into the trace.
    pub fn step(&mut self, rho: &DensityMatrix, povm: &PovmSet, rng: &mut RngStream) -> Result<(usize, Vec<f64>)> {
        if povm.dim() != self.stack.dim() {
            return Err(Error::invalid("POVM dimension differs from memory"));
        }
        let pass = self.stack.forward(&self.h, rho)?;
        let dist = distribution_from_pass(&pass, povm)?;
        let action = sample_action(&dist, rng);
        let grad = pass.gradient(&self.stack, povm.element(action));
        self.observe_gradient(&grad)?;
        Ok((action, dist))
    }

    /// Like [`GlowAgent::step`] for a percept that always maps to the same
    /// `rho` and `povm`. Passes and gradients are reused until `h` changes,
    /// which in episodic tasks with sparse rewards saves most of the work.
    pub fn step_labeled(
        &mut self,
        label: usize,
        rho: &DensityMatrix,
        povm: &PovmSet,
        rng: &mut RngStream,
    ) -> Result<(usize, Vec<f64>)> {
        if povm.dim() != self.stack.dim() {
            return Err(Error::invalid("POVM dimension differs from memory"));
        }
        if self.cache.len() <= label {
            self.cache.resize(label + 1, None);
        }
        if self.cache[label].is_none() {
            let pass = self.stack.forward(&self.h, rho)?;
            let dist = distribution_from_pass(&pass, povm)?;
            self.cache[label] = Some(CachedPass { pass, dist, grads: vec![None; povm.num_actions()] });
        }
        let entry = self.cache[label].as_mut().expect("filled above");
        let action = sample_action(&entry.dist, rng);
        let stack = &self.stack;
        let grad = entry.grads[action].get_or_insert_with(|| entry.pass.gradient(stack, povm.element(action)));
        let keep = 1.0 - self.params.eta;
        for (e, g) in self.e.iter_mut().zip(grad.iter()) {
            *e = keep * *e + g;
        }
        Ok((action, entry.dist.clone()))
    }

    /// Like [`GlowAgent::step`], but with the gradient supplied by `mode`.
    /// Returns the action, the distribution and the internal cycles spent.
    pub fn step_with(
        &mut self,
        rho: &DensityMatrix,
        povm: &PovmSet,
        mode: &GradientMode,
        rng: &mut RngStream,
    ) -> Result<(usize, Vec<f64>, u64)> {
        if let GradientMode::Analytic = mode {
            let (a, d) = self.step(rho, povm, rng)?;
            return Ok((a, d, 0));
        }
        let dist = self.distribution(rho, povm)?;
        let action = sample_action(&dist, rng);
        let (grad, internal) = mode.estimate(&self.stack, &self.h, rho, povm, action, rng)?;
        self.observe_gradient(&grad)?;
        Ok((action, dist, internal))
    }

    pub fn reset_episode(&mut self) {
        self.e.iter_mut().for_each(|e| *e = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{case_ii_hamiltonians, case_i_hamiltonians};
    use crate::policy::{encode_invasion_2x2, povm_action_subsystem};
    use proptest::prelude::*;

    fn stack(n: usize, seed: u64) -> Arc<HamiltonianStack> {
        let mut rng = RngStream::new(seed, 0);
        let (h1, h2) = case_ii_hamiltonians(2, 2, &mut rng);
        Arc::new(HamiltonianStack::alternating(h1, h2, n).unwrap())
    }

    fn agent(n: usize, alpha: f64, eta: f64) -> GlowAgent {
        GlowAgent::new(stack(n, 1), GlowParams::new(alpha, eta)).unwrap()
    }

    #[test]
    fn labeled_steps_match_uncached_steps() {
        let (mut a, mut b) = (agent(6, 0.1, 0.3), agent(6, 0.1, 0.3));
        let povm = povm_action_subsystem(2, 2);
        let states = [encode_invasion_2x2(0, 1.0).unwrap(), encode_invasion_2x2(1, 0.7).unwrap()];
        let (mut ra, mut rb) = (RngStream::new(4, 0), RngStream::new(4, 0));
        let mut labels = RngStream::new(5, 0);
        for t in 0..300 {
            let s = labels.index(2);
            let (x, dx) = a.step(&states[s], &povm, &mut ra).unwrap();
            let (y, dy) = b.step_labeled(s, &states[s], &povm, &mut rb).unwrap();
            assert_eq!((x, &dx), (y, &dy));
            let r = if t % 7 == 0 { if x == s { 1.0 } else { -1.0 } } else { 0.0 };
            a.apply_reward(r);
            b.apply_reward(r);
            assert_eq!(a.trace(), b.trace());
            assert_eq!(a.controls(), b.controls());
        }
    }

    #[test]
    fn trace_updates() {
        let g1 = [1.0, -2.0, 0.5];
        let g2 = [0.25, 1.0, -1.0];

        let mut a = agent(3, 0.1, 1.0);
        a.observe_gradient(&g1).unwrap();
        a.observe_gradient(&g2).unwrap();
        assert_eq!(a.trace(), &g2);

        let mut a = agent(3, 0.1, 0.0);
        a.observe_gradient(&g1).unwrap();
        a.observe_gradient(&g2).unwrap();
        assert_eq!(a.trace(), &[1.25, -1.0, -0.5]);

        let mut a = agent(3, 0.1, 0.5);
        a.observe_gradient(&g1).unwrap();
        a.observe_gradient(&g1).unwrap();
        assert_eq!(a.trace(), &[1.5, -3.0, 0.75]);

        assert!(a.observe_gradient(&[1.0]).is_err());
    }

    #[test]
    fn reward_updates() {
        let mut a = agent(2, 0.3, 1.0);
        a.observe_gradient(&[1.0, 2.0]).unwrap();
        a.apply_reward(0.0);
        assert_eq!(&a.controls()[..], &[0.0, 0.0]);
        a.apply_reward(2.0);
        assert_eq!(&a.controls()[..], &[0.6, 1.2]);

        let params = GlowParams { alpha: 0.0, eta: 1.0, kappa: 1.0 };
        let mut a = GlowAgent::new(stack(2, 1), params)
            .unwrap()
            .with_equilibrium(ControlVector::from_vec(vec![0.7, -0.2]))
            .unwrap();
        a.apply_reward(5.0);
        assert_eq!(&a.controls()[..], &[0.7, -0.2]);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GlowAgent::new(stack(1, 1), GlowParams::new(-1.0, 0.5)).is_err());
        assert!(GlowAgent::new(stack(1, 1), GlowParams::new(0.1, 1.5)).is_err());
    }

    #[test]
    fn deterministic_trajectories() {
        let povm = povm_action_subsystem(2, 2);
        let run = || {
            let mut a = agent(4, 0.1, 0.8);
            let mut rng = RngStream::new(77, 3);
            let mut log = Vec::new();
            for t in 0..50 {
                let s = t % 2;
                let rho = encode_invasion_2x2(s, 1.0).unwrap();
                let (act, dist) = a.step(&rho, &povm, &mut rng).unwrap();
                a.apply_reward(if act == s { 1.0 } else { -1.0 });
                log.push((act, dist));
            }
            (log, a.controls().clone())
        };
        let (l1, h1) = run();
        let (l2, h2) = run();
        assert_eq!(l1, l2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn frozen_policy_with_zero_alpha() {
        let povm = povm_action_subsystem(2, 2);
        let mut a = agent(4, 0.0, 1.0).with_controls(ControlVector::from_vec(vec![0.3, -0.4, 0.9, 0.1])).unwrap();
        let rho = encode_invasion_2x2(0, 1.0).unwrap();
        let mut rng = RngStream::new(1, 1);
        let (_, first) = a.step(&rho, &povm, &mut rng).unwrap();
        for _ in 0..20 {
            let (_, d) = a.step(&rho, &povm, &mut rng).unwrap();
            a.apply_reward(1.0);
            assert_eq!(d, first);
        }
    }

    #[test]
    fn rewarded_step_increases_probability() {
        let mut rng = RngStream::new(5, 0);
        for trial in 0..20 {
            let (h1, h2) = case_i_hamiltonians(4, &mut rng);
            let st = Arc::new(HamiltonianStack::alternating(h1, h2, 6).unwrap());
            let h0 = ControlVector::from_vec((0..6).map(|_| rng.normal()).collect());
            let mut a = GlowAgent::new(st, GlowParams::new(1e-4, 1.0)).unwrap().with_controls(h0).unwrap();
            let rho = DensityMatrix::random(4, &mut rng);
            let povm = povm_action_subsystem(2, 2);
            let (act, before) = a.step(&rho, &povm, &mut rng).unwrap();
            a.apply_reward(1.0);
            let after = a.distribution(&rho, &povm).unwrap();
            assert!(after[act] > before[act], "trial {trial}");
        }
    }

    #[test]
    fn reset_clears_trace() {
        let povm = povm_action_subsystem(2, 2);
        let rho = encode_invasion_2x2(1, 1.0).unwrap();
        let h0 = ControlVector::from_vec(vec![0.2, 0.5, -0.3]);
        let mut glow = agent(3, 0.1, 0.2).with_controls(h0.clone()).unwrap();
        let mut plain = agent(3, 0.1, 1.0).with_controls(h0).unwrap();
        glow.observe_gradient(&[3.0, 3.0, 3.0]).unwrap();
        glow.reset_episode();
        glow.reset_episode();
        assert_eq!(glow.trace(), &[0.0; 3]);
        let mut r1 = RngStream::new(2, 2);
        let mut r2 = RngStream::new(2, 2);
        glow.step(&rho, &povm, &mut r1).unwrap();
        plain.step(&rho, &povm, &mut r2).unwrap();
        assert_eq!(glow.trace(), plain.trace());
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let params = GlowParams { alpha: 0.5, eta: 0.3, kappa: 0.4 };
        let target = ControlVector::from_vec(vec![1.0, -2.0]);
        let mut a = GlowAgent::new(stack(2, 1), params)
            .unwrap()
            .with_equilibrium(target.clone())
            .unwrap()
            .with_controls(target.clone())
            .unwrap();
        a.observe_gradient(&[4.0, 4.0]).unwrap();
        for _ in 0..10 {
            a.apply_reward(0.0);
        }
        assert_eq!(a.controls(), &target);
    }

    proptest! {
        #[test]
        fn closed_form_equivalence(
            eta in 0.0f64..=1.0,
            alpha in 0.0f64..1.0,
            steps in prop::collection::vec(
                (prop::collection::vec(-2.0f64..2.0, 3), -10.0f64..10.0), 1..25),
        ) {
            let mut a = agent(3, alpha, eta);
            for (g, r) in &steps {
                a.observe_gradient(g).unwrap();
                a.apply_reward(*r);
            }
            // h_T = α Σ_t r_t Σ_{k=0}^{t} (1−η)^k ∇_{t−k}
            let mut expected = [0.0f64; 3];
            for t in 0..steps.len() {
                for k in 0..=t {
                    let w = alpha * steps[t].1 * (1.0 - eta).powi(k as i32);
                    for c in 0..3 {
                        expected[c] += w * steps[t - k].0[c];
                    }
                }
            }
            for c in 0..3 {
                prop_assert!((a.controls()[c] - expected[c]).abs() < 1e-12 * (1.0 + expected[c].abs()));
            }
        }

        #[test]
        fn zero_reward_stasis(grads in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..30)) {
            let mut a = agent(2, 0.7, 0.4);
            for g in &grads {
                a.observe_gradient(g).unwrap();
                a.apply_reward(0.0);
            }
            prop_assert_eq!(&a.controls()[..], &[0.0, 0.0]);
        }
    }
}
