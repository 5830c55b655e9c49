//! How close is the memory to a target unitary `U_T`?
//!
//! All quantities except [`subspace_fidelity`], [`channel_fidelity`] and
//! [`percept_fidelity`] depend on `U` only through `Tr(U_T† U)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmath::{identity, is_hermitian, CMatrix, CVector};

const PROJECTOR_TOL: f64 = 1e-10;
const CHANNEL_TOL: f64 = 1e-10;

fn same_shape(u: &CMatrix, u_t: &CMatrix) -> Result<usize> {
    if !u.is_square() || u.shape() != u_t.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            u.shape(),
            u_t.shape()
        )));
    }
    Ok(u.nrows())
}

/// `Tr(U_T† U)` without forming the product.
fn overlap(u: &CMatrix, u_t: &CMatrix) -> Complex64 {
    u_t.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `Tr(U_T† U) / n`.
pub fn cos_angle(u: &CMatrix, u_t: &CMatrix) -> Result<Complex64> {
    let n = same_shape(u, u_t)?;
    Ok(overlap(u, u_t) / n as f64)
}

/// `‖U − U_T‖²_F = 2n − 2 Re Tr(U_T† U)` for unitaries.
pub fn distance_sq(u: &CMatrix, u_t: &CMatrix) -> Result<f64> {
    let n = same_shape(u, u_t)? as f64;
    Ok(2.0 * n - 2.0 * overlap(u, u_t).re)
}

/// Haar-averaged state fidelity `(n + |Tr(U_T† U)|²) / (n(n+1))`.
pub fn avg_fidelity(u: &CMatrix, u_t: &CMatrix) -> Result<f64> {
    let n = same_shape(u, u_t)? as f64;
    Ok((n + overlap(u, u_t).norm_sqr()) / (n * (n + 1.0)))
}

/// Fidelity averaged over pure states in the range of projector `P`:
/// `[Tr(M†M) + |Tr M|²] / (d(d+1))` with `M = P U_T† U P`.
pub fn subspace_fidelity(u: &CMatrix, u_t: &CMatrix, p: &CMatrix) -> Result<f64> {
    let n = same_shape(u, u_t)?;
    if p.shape() != (n, n) || !is_hermitian(p, PROJECTOR_TOL) {
        return Err(Error::invalid("P must be a Hermitian matrix of the memory dimension"));
    }
    let idempotency = (p * p - p).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if idempotency > PROJECTOR_TOL {
        return Err(Error::invalid("P is not a projector"));
    }
    let d = p.trace().re.round();
    if d < 1.0 {
        return Err(Error::invalid("P has rank zero"));
    }
    let m = p * u_t.adjoint() * u * p;
    let hs: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    Ok((hs + m.trace().norm_sqr()) / (d * (d + 1.0)))
}

/// Completely positive, trace-preserving map `ρ ↦ Σ G_k ρ G_k†`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let n = ops
            .first()
            .ok_or_else(|| Error::invalid("channel needs at least one Kraus operator"))?
            .nrows();
        let mut sum = CMatrix::zeros(n, n);
        for g in &ops {
            if g.shape() != (n, n) {
                return Err(Error::invalid("Kraus operators differ in shape"));
            }
            sum += g.adjoint() * g;
        }
        let defect = (sum - identity(n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > CHANNEL_TOL {
            return Err(Error::invalid(format!("channel is not trace preserving (defect {defect:e})")));
        }
        Ok(Self { ops })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, g| acc + g * rho * g.adjoint())
    }
}

/// `(n + Σ_k |Tr(U_T† G_k)|²) / (n(n+1))`.
pub fn channel_fidelity(channel: &KrausChannel, u_t: &CMatrix) -> Result<f64> {
    let n = same_shape(&channel.ops[0], u_t)? as f64;
    let s: f64 = channel.ops.iter().map(|g| overlap(g, u_t).norm_sqr()).sum();
    Ok((n + s) / (n * (n + 1.0)))
}

/// Probability that the channel's output, undone by `U_T`, is found back in
/// its input state: `Σ_k p_k ⟨Ψ_k| U_T† M(|Ψ_k⟩⟨Ψ_k|) U_T |Ψ_k⟩`.
pub fn percept_fidelity(channel: &KrausChannel, u_t: &CMatrix, inputs: &[(CVector, f64)]) -> Result<f64> {
    same_shape(&channel.ops[0], u_t)?;
    if inputs.iter().any(|(_, p)| *p < 0.0) {
        return Err(Error::invalid("input probabilities must be non-negative"));
    }
    let total: f64 = inputs.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("input probabilities sum to {total}")));
    }
    let mut f = 0.0;
    for (psi, p) in inputs {
        if *p == 0.0 {
            continue;
        }
        // ⟨Ψ|U_T† G ρ G† U_T|Ψ⟩ = Σ_k |⟨Ψ|U_T† G_k|Ψ⟩|²
        let target = u_t * psi;
        let s: f64 = channel.ops.iter().map(|g| target.dotc(&(g * psi)).norm_sqr()).sum();
        f += p * s;
    }
    Ok(f)
}
