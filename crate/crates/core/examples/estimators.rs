//! Analytic gradient against finite-difference, sampled and neural-gas
//! estimates on one qubit-pair instance.
//!
//! cargo run --release --example estimators

use std::sync::Arc;

use qglow::estimators::{fd_gradient_expectation, fd_gradient_samples, neural_gas_difference, CloudConfig, MeasurementOracle};
use qglow::memory::{case_i_hamiltonians, HamiltonianStack};
use qglow::policy::{encode_invasion_2x2, povm_action_subsystem};
use qglow::qmath::RngStream;

fn main() -> qglow::Result<()> {
    let mut rng = RngStream::new(1, 0);
    let (h1, h2) = case_i_hamiltonians(4, &mut rng);
    let stack = Arc::new(HamiltonianStack::alternating(h1, h2, 2)?);
    let rho = encode_invasion_2x2(0, 1.0)?;
    let povm = povm_action_subsystem(2, 2);
    let h = [0.3, -0.2];

    let analytic = stack.forward(&h, &rho)?.gradient(&stack, povm.element(0));
    let mut oracle = MeasurementOracle::new(stack.clone(), rho, povm, 0)?;
    let fd = fd_gradient_expectation(|x| oracle.probability(x), &h, 1e-6)?;
    let sampled = fd_gradient_samples(&mut oracle, &h, 0.05, 10_000, &mut rng)?;
    let cloud = CloudConfig { n_samples: 2000, sigma: 0.1, sigma_decay: 1.0 };
    let gas = neural_gas_difference(&mut oracle, &h, &cloud, &mut rng)?;

    println!("analytic      {analytic:.4?}");
    println!("forward diff  {fd:.4?}");
    println!("sampled       {:.4?} ± {:.4?}", sampled.mean, sampled.sem);
    println!("neural gas    {gas:.4?} (direction only)");
    Ok(())
}
