use crate::error::{Error, Result};

/// One gradient-ascent SARSA(λ) step on parameters `theta`:
/// `e ← γλe + ∇U`, then `θ ← θ + α[r + γU′ − U]e`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_rl_update(
    theta: &mut [f64],
    e: &mut [f64],
    grad_u: &[f64],
    r: f64,
    u: f64,
    u_prime: f64,
    alpha: f64,
    gamma: f64,
    lambda: f64,
) -> Result<()> {
    if theta.len() != e.len() || e.len() != grad_u.len() {
        return Err(Error::invalid("parameter, trace and gradient lengths differ"));
    }
    let decay = gamma * lambda;
    for (ek, gk) in e.iter_mut().zip(grad_u) {
        *ek = decay * *ek + gk;
    }
    let step = alpha * (r + gamma * u_prime - u);
    for (t, ek) in theta.iter_mut().zip(e.iter()) {
        *t += step * ek;
    }
    Ok(())
}
