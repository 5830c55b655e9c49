//! Model-free replacements for the analytic gradient.
//!
//! When the memory is a physical device, `∇p(a|s)` is not available in closed
//! form. These estimators only need either probability evaluations at shifted
//! controls, or single ±1 measurement outcomes ("did the device answer `a` again?").

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::memory::HamiltonianStack;
use crate::policy::{distribution_from_pass, sample_action, PovmSet};
use crate::qmath::{DensityMatrix, RngStream};

/// Stochastic `±1` answer to "does the memory at `h` reproduce the action?".
/// The mean of the answer is `2p(a|s; h) − 1`.
pub trait BinaryOutcomeOracle {
    fn query(&mut self, h: &[f64], rng: &mut RngStream) -> Result<f64>;

    /// Number of internal cycles spent so far.
    fn queries(&self) -> u64;
}

/// Prepares `ρ(s)`, applies `U(h)`, measures the POVM and compares with `a`.
#[derive(Debug, Clone)]
pub struct MeasurementOracle {
    stack: Arc<HamiltonianStack>,
    rho: DensityMatrix,
    povm: PovmSet,
    action: usize,
    queries: u64,
}

impl MeasurementOracle {
    pub fn new(stack: Arc<HamiltonianStack>, rho: DensityMatrix, povm: PovmSet, action: usize) -> Result<Self> {
        if rho.dim() != stack.dim() || povm.dim() != stack.dim() {
            return Err(Error::invalid("oracle dimensions differ"));
        }
        if action >= povm.num_actions() {
            return Err(Error::invalid("action outside POVM"));
        }
        Ok(Self { stack, rho, povm, action, queries: 0 })
    }

    /// Exact `p(a|s; h)`.
    pub fn probability(&self, h: &[f64]) -> Result<f64> {
        let pass = self.stack.forward(h, &self.rho)?;
        Ok(distribution_from_pass(&pass, &self.povm)?[self.action])
    }
}

impl BinaryOutcomeOracle for MeasurementOracle {
    fn query(&mut self, h: &[f64], rng: &mut RngStream) -> Result<f64> {
        let pass = self.stack.forward(h, &self.rho)?;
        let dist = distribution_from_pass(&pass, &self.povm)?;
        self.queries += 1;
        Ok(if sample_action(&dist, rng) == self.action { 1.0 } else { -1.0 })
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

/// Adapts a closure into an oracle.
pub struct FnOracle<F> {
    f: F,
    queries: u64,
}

impl<F: FnMut(&[f64], &mut RngStream) -> f64> FnOracle<F> {
    pub fn new(f: F) -> Self {
        Self { f, queries: 0 }
    }
}

impl<F: FnMut(&[f64], &mut RngStream) -> f64> BinaryOutcomeOracle for FnOracle<F> {
    fn query(&mut self, h: &[f64], rng: &mut RngStream) -> Result<f64> {
        self.queries += 1;
        Ok((self.f)(h, rng))
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

/// Forward differences `[p(h + δe_k) − p(h)]/δ`.
pub fn fd_gradient_expectation<F>(mut p_eval: F, h: &[f64], delta: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(delta > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let base = p_eval(h)?;
    let mut shifted = h.to_vec();
    let mut grad = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        shifted[k] = h[k] + delta;
        grad.push((p_eval(&shifted)? - base) / delta);
        shifted[k] = h[k];
    }
    Ok(grad)
}

/// Per-component mean and standard error of a sampled gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGradient {
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

/// Averages `m` paired draws of `[s(h + δe_k) − s(h)] / (2δ)` per component.
pub fn fd_gradient_samples<O: BinaryOutcomeOracle + ?Sized>(
    oracle: &mut O,
    h: &[f64],
    delta: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<SampledGradient> {
    if m == 0 {
        return Err(Error::invalid("need at least one sample per point"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut shifted = h.to_vec();
    let mut mean = Vec::with_capacity(h.len());
    let mut sem = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        shifted[k] = h[k] + delta;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..m {
            let base = oracle.query(h, rng)?;
            let moved = oracle.query(&shifted, rng)?;
            let x = (moved - base) / (2.0 * delta);
            sum += x;
            sum_sq += x * x;
        }
        shifted[k] = h[k];
        let mu = sum / m as f64;
        let var = if m > 1 { (sum_sq - m as f64 * mu * mu) / (m - 1) as f64 } else { 0.0 };
        mean.push(mu);
        sem.push((var.max(0.0) / m as f64).sqrt());
    }
    Ok(SampledGradient { mean, sem })
}

/// Gaussian sampling cloud around the current controls.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub n_samples: usize,
    pub sigma: f64,
    #[serde(default = "unit")]
    pub sigma_decay: f64,
}

fn unit() -> f64 {
    1.0
}

impl CloudConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::invalid("cloud needs at least two samples"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("cloud width must be positive"));
        }
        if !(self.sigma_decay > 0.0 && self.sigma_decay <= 1.0) {
            return Err(Error::invalid("cloud decay must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Shrinks the cloud by one external cycle.
    pub fn advance(&mut self) {
        self.sigma *= self.sigma_decay;
    }
}

/// `(1/n) Σ s_k (h_k − h_center)` over a Gaussian cloud, accumulated as a
/// running mean. Points that reproduce the action pull the estimate towards
/// themselves, the others push it away.
pub fn neural_gas_difference<O: BinaryOutcomeOracle + ?Sized>(
    oracle: &mut O,
    h_center: &[f64],
    cfg: &CloudConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut d = vec![0.0; h_center.len()];
    let mut offset = vec![0.0; h_center.len()];
    let mut point = h_center.to_vec();
    for n in 1..=cfg.n_samples {
        for ((o, p), c) in offset.iter_mut().zip(point.iter_mut()).zip(h_center) {
            *o = cfg.sigma * rng.normal();
            *p = c + *o;
        }
        let s = oracle.query(&point, rng)?;
        let w = 1.0 / n as f64;
        for (dk, ok) in d.iter_mut().zip(&offset) {
            *dk = (1.0 - w) * *dk + w * s * ok;
        }
    }
    Ok(d)
}

/// Source of the gradient `∇p(a|s)` used by the agent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradientMode {
    Analytic,
    FiniteDifference { delta: f64 },
    Samples { delta: f64, m: usize },
    NeuralGas { n_samples: usize, sigma: f64 },
}

impl Default for GradientMode {
    fn default() -> Self {
        GradientMode::Analytic
    }
}

impl GradientMode {
    /// Gradient estimate for the sampled `action` and the number of internal
    /// cycles (device queries) it consumed.
    pub fn estimate(
        &self,
        stack: &Arc<HamiltonianStack>,
        h: &[f64],
        rho: &DensityMatrix,
        povm: &PovmSet,
        action: usize,
        rng: &mut RngStream,
    ) -> Result<(Vec<f64>, u64)> {
        let mut oracle = MeasurementOracle::new(stack.clone(), rho.clone(), povm.clone(), action)?;
        match *self {
            GradientMode::Analytic => {
                let pass = stack.forward(h, rho)?;
                Ok((pass.gradient(stack, povm.element(action)), 0))
            }
            GradientMode::FiniteDifference { delta } => {
                let g = fd_gradient_expectation(|x| oracle.probability(x), h, delta)?;
                Ok((g, 0))
            }
            GradientMode::Samples { delta, m } => {
                let g = fd_gradient_samples(&mut oracle, h, delta, m, rng)?;
                Ok((g.mean, oracle.queries()))
            }
            GradientMode::NeuralGas { n_samples, sigma } => {
                let cfg = CloudConfig { n_samples, sigma, sigma_decay: 1.0 };
                let d = neural_gas_difference(&mut oracle, h, &cfg, rng)?;
                Ok((d, oracle.queries()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::case_i_hamiltonians;
    use crate::policy::povm_action_subsystem;
    use crate::qmath::random_hermitian;

    fn normalized_dot(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    fn instance(seed: u64) -> (MeasurementOracle, Vec<f64>) {
        let mut rng = RngStream::new(seed, 0);
        let (h1, h2) = case_i_hamiltonians(4, &mut rng);
        let stack = Arc::new(HamiltonianStack::alternating(h1, h2, 4).unwrap());
        let rho = DensityMatrix::random(4, &mut rng);
        let h: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        (MeasurementOracle::new(stack, rho, povm_action_subsystem(2, 2), 1).unwrap(), h)
    }

    fn analytic(oracle: &MeasurementOracle, h: &[f64]) -> Vec<f64> {
        let pass = oracle.stack.forward(h, &oracle.rho).unwrap();
        pass.gradient(&oracle.stack, oracle.povm.element(oracle.action))
    }

    #[test]
    fn constant_probability_has_zero_gradient() {
        let g = fd_gradient_expectation(|_| Ok(0.3), &[1.0, 2.0], 1e-3).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(fd_gradient_expectation(|_| Ok(0.3), &[1.0], 0.0).is_err());
    }

    #[test]
    fn forward_difference_converges_first_order() {
        let (oracle, h) = instance(1);
        let exact = analytic(&oracle, &h);
        let err = |delta: f64| {
            let g = fd_gradient_expectation(|x| oracle.probability(x), &h, delta).unwrap();
            g.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        assert!(err(1e-5) < 1e-4);
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!((e1 / e2 - 2.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn certain_outcome_gives_zero_sampled_gradient() {
        let mut oracle = FnOracle::new(|_: &[f64], _: &mut RngStream| 1.0);
        let mut rng = RngStream::new(1, 0);
        let g = fd_gradient_samples(&mut oracle, &[0.0, 1.0, 2.0], 0.1, 10, &mut rng).unwrap();
        assert_eq!(g.mean, vec![0.0; 3]);
        assert_eq!(oracle.queries(), 60);
    }

    #[test]
    fn sampled_gradient_is_reproducible_and_consistent() {
        let mut rng = RngStream::new(7, 0);
        let stack = Arc::new(
            HamiltonianStack::from_layers(vec![random_hermitian(2, &mut rng)]).unwrap(),
        );
        let rho = DensityMatrix::random(2, &mut rng);
        let povm = povm_action_subsystem(1, 2);
        let mut oracle = MeasurementOracle::new(stack, rho, povm, 0).unwrap();
        let h = [0.4];
        let delta = 0.05;
        let mut r1 = RngStream::new(9, 1);
        let est = fd_gradient_samples(&mut oracle, &h, delta, 100_000, &mut r1).unwrap();
        let mut r2 = RngStream::new(9, 1);
        assert_eq!(est, fd_gradient_samples(&mut oracle, &h, delta, 100_000, &mut r2).unwrap());
        let expected = fd_gradient_expectation(|x| oracle.probability(x), &h, delta).unwrap();
        assert!((est.mean[0] - expected[0]).abs() < 3.0 * est.sem[0]);
    }

    #[test]
    fn symmetric_cloud_with_constant_answer_averages_out() {
        let mut oracle = FnOracle::new(|_: &[f64], _: &mut RngStream| 1.0);
        let mut rng = RngStream::new(3, 0);
        let cfg = CloudConfig { n_samples: 100_000, sigma: 1.0, sigma_decay: 1.0 };
        let d = neural_gas_difference(&mut oracle, &[5.0, -5.0], &cfg, &mut rng).unwrap();
        assert!(d.iter().all(|x| x.abs() < 0.02));
    }

    #[test]
    fn sign_oracle_aligns_with_axis() {
        let mut oracle = FnOracle::new(|h: &[f64], _: &mut RngStream| if h[0] > 1.0 { 1.0 } else { -1.0 });
        let mut rng = RngStream::new(4, 0);
        let cfg = CloudConfig { n_samples: 10_000, sigma: 1.0, sigma_decay: 1.0 };
        let d = neural_gas_difference(&mut oracle, &[1.0, 0.0, 0.0], &cfg, &mut rng).unwrap();
        assert!(normalized_dot(&d, &[1.0, 0.0, 0.0]) > 0.9);
    }

    #[test]
    fn cloud_decay_and_validation() {
        let mut cfg = CloudConfig { n_samples: 4, sigma: 2.0, sigma_decay: 0.5 };
        for _ in 0..3 {
            cfg.advance();
        }
        assert_eq!(cfg.sigma, 0.25);
        assert!(CloudConfig { n_samples: 1, sigma: 1.0, sigma_decay: 1.0 }.validate().is_err());
        assert!(CloudConfig { n_samples: 4, sigma: 0.0, sigma_decay: 1.0 }.validate().is_err());
    }
}
