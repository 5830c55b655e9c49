//! Percept encodings, measurement operators, and the measurement-based
//! policy `p(a|s) = Tr[U ρ(s) U† Π(a)]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::memory::{check_effect, ForwardPass, MemorySnapshot};
use crate::qmath::{
    basis_vector, identity, is_unitary, kron, projector, CMatrix, CVector, DensityMatrix,
    RngStream, TRACE_TOL,
};

/// Roundoff below this is clipped to zero probability.
const NEGATIVE_PROBABILITY_TOL: f64 = 1e-12;

/// Density matrices indexed by percept label.
#[derive(Debug, Clone)]
pub struct PerceptEncoding {
    states: Vec<DensityMatrix>,
}

impl PerceptEncoding {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let dim = states
            .first()
            .ok_or_else(|| Error::invalid("encoding needs at least one percept"))?
            .dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::invalid("percept states differ in dimension"));
        }
        Ok(Self { states })
    }

    pub fn state(&self, percept: usize) -> &DensityMatrix {
        &self.states[percept]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// Complete set of positive operators; element `a` selects action `a`.
#[derive(Debug, Clone)]
pub struct PovmSet {
    elements: Vec<CMatrix>,
}

impl PovmSet {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let dim = elements
            .first()
            .ok_or_else(|| Error::invalid("POVM needs at least one element"))?
            .nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &elements {
            check_effect(e, dim)?;
            sum += e;
        }
        let defect = (sum - identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > TRACE_TOL {
            return Err(Error::invalid(format!("POVM is incomplete (defect {defect:e})")));
        }
        Ok(Self { elements })
    }

    pub fn element(&self, action: usize) -> &CMatrix {
        &self.elements[action]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn num_actions(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `{V Π V†}`.
    pub fn conjugate(&self, v: &CMatrix) -> Result<PovmSet> {
        PovmSet::new(self.elements.iter().map(|e| v * e * v.adjoint()).collect())
    }
}

/// `|φ⟩ = Σ_a |a⟩ / √d`.
pub fn uniform_superposition(d: usize) -> CVector {
    CVector::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0))
}

/// `p_coh |φ⟩⟨φ| + (1 − p_coh) I/d` on the action register.
pub fn action_input_state(dim_a: usize, p_coh: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p_coh) {
        return Err(Error::invalid(format!("p_coh = {p_coh} outside [0, 1]")));
    }
    if p_coh == 1.0 {
        return DensityMatrix::from_pure(uniform_superposition(dim_a));
    }
    if p_coh == 0.0 {
        return Ok(DensityMatrix::maximally_mixed(dim_a));
    }
    let phi = projector(&uniform_superposition(dim_a));
    let m = phi * Complex64::new(p_coh, 0.0)
        + identity(dim_a) * Complex64::new((1.0 - p_coh) / dim_a as f64, 0.0);
    DensityMatrix::from_matrix(m)
}

/// `|s⟩⟨s| ⊗ ρ_A(p_coh)` with the percept in a `dim_s` register.
pub fn encode_percept_action(s: usize, dim_s: usize, dim_a: usize, p_coh: f64) -> Result<DensityMatrix> {
    if s >= dim_s {
        return Err(Error::invalid(format!("percept {s} outside register of dim {dim_s}")));
    }
    let percept = DensityMatrix::from_pure(basis_vector(dim_s, s))?;
    Ok(percept.kron(&action_input_state(dim_a, p_coh)?))
}

/// Two symbols, two moves: `|s⟩⟨s| ⊗ ρ_A(p_coh)` on a 4-dim space.
pub fn encode_invasion_2x2(s: usize, p_coh: f64) -> Result<DensityMatrix> {
    encode_percept_action(s, 2, 2, p_coh)
}

/// Symbol `j`, color `k`: `|j⟩⟨j| ⊗ |k⟩⟨k|`.
pub fn encode_invasion_4(j: usize, k: usize) -> Result<DensityMatrix> {
    if j > 1 || k > 1 {
        return Err(Error::invalid("symbol and color must be 0 or 1"));
    }
    DensityMatrix::from_pure(basis_vector(4, 2 * j + k))
}

/// Symbol ⊗ color ⊗ action register, `|s⟩⟨s| ⊗ ρ_C ⊗ |φ⟩⟨φ|` on dim 8.
pub fn encode_neverending(s: usize, rho_c: &DensityMatrix) -> Result<DensityMatrix> {
    if s > 1 {
        return Err(Error::invalid("symbol must be 0 or 1"));
    }
    if rho_c.dim() != 2 {
        return Err(Error::invalid("color state must be a qubit"));
    }
    let symbol = DensityMatrix::from_pure(basis_vector(2, s))?;
    Ok(symbol.kron(rho_c).kron(&action_input_state(2, 1.0)?))
}

/// `Π(a) = I_rest ⊗ |a⟩⟨a|` for the last tensor factor of dimension `dim_a`.
pub fn povm_action_subsystem(dim_rest: usize, dim_a: usize) -> PovmSet {
    assert!(dim_rest >= 1 && dim_a >= 1);
    let elements = (0..dim_a)
        .map(|a| kron(&identity(dim_rest), &projector(&basis_vector(dim_a, a))))
        .collect();
    PovmSet::new(elements).expect("action-register projectors are complete")
}

/// `Π_jk = U_T ρ_jk U_T†`, ordered `(j,k) = (0,0), (0,1), (1,0), (1,1)`.
/// With `merge_colors` the color outcome is summed out: `Π_j = Σ_k Π_jk`.
pub fn povm_rotated(u_t: &CMatrix, merge_colors: bool) -> Result<PovmSet> {
    if u_t.shape() != (4, 4) || !is_unitary(u_t, 1e-10) {
        return Err(Error::invalid("target must be a 4x4 unitary"));
    }
    let rank_one: Vec<CMatrix> = (0..4)
        .map(|i| {
            let v = u_t.column(i).into_owned();
            projector(&v)
        })
        .collect();
    if merge_colors {
        PovmSet::new(vec![&rank_one[0] + &rank_one[1], &rank_one[2] + &rank_one[3]])
    } else {
        PovmSet::new(rank_one)
    }
}

fn normalize(raw: Vec<f64>) -> Result<Vec<f64>> {
    let mut p = raw;
    for x in p.iter_mut() {
        if *x < -NEGATIVE_PROBABILITY_TOL {
            return Err(Error::invalid(format!("negative probability {x:e}: broken POVM")));
        }
        *x = x.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > TRACE_TOL {
        return Err(Error::invalid(format!("probabilities sum to {total}: incomplete POVM")));
    }
    for x in p.iter_mut() {
        *x /= total;
    }
    Ok(p)
}

/// `p(a|s) = Tr[U ρ U† Π(a)]` for every action, clipped and renormalized.
pub fn action_distribution(snap: &MemorySnapshot, rho: &DensityMatrix, povm: &PovmSet) -> Result<Vec<f64>> {
    let u = snap.unitary();
    if u.nrows() != rho.dim() || povm.dim() != rho.dim() {
        return Err(Error::invalid("memory, state and POVM dimensions differ"));
    }
    let out = u * rho.matrix() * u.adjoint();
    normalize(povm.elements.iter().map(|e| (&out * e).trace().re).collect())
}

/// Same distribution from a vector forward pass.
pub fn distribution_from_pass(pass: &ForwardPass, povm: &PovmSet) -> Result<Vec<f64>> {
    normalize(povm.elements.iter().map(|e| pass.probability(e)).collect())
}

/// Inverse-CDF draw in action order.
pub fn sample_action(dist: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (a, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // Roundoff can leave the cumulative sum a hair below one.
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(dist.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{build_snapshot, case_i_hamiltonians, ControlVector, HamiltonianStack};
    use crate::qmath::{c, frobenius_norm, partial_trace, random_mixed_qubit, random_unitary};

    fn swap() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(i, j)] = c(1.0, 0.0);
        }
        m
    }

    #[test]
    fn invasion_2x2_pure_and_mixed() {
        let rho = encode_invasion_2x2(0, 1.0).unwrap();
        let plus = uniform_superposition(2);
        let expected = kron(&projector(&basis_vector(2, 0)), &projector(&plus));
        assert!(frobenius_norm(&(rho.matrix() - expected)) < 1e-15);

        let rho = encode_invasion_2x2(1, 0.0).unwrap();
        let expected = kron(&projector(&basis_vector(2, 1)), &(identity(2) * c(0.5, 0.0)));
        assert!(frobenius_norm(&(rho.matrix() - expected)) < 1e-15);

        let rho = encode_invasion_2x2(0, 0.5).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
        let a = partial_trace(rho.matrix(), &[2, 2], &[1]).unwrap();
        assert!(((&a * &a).trace().re - 0.625).abs() < 1e-14);
        assert!(encode_invasion_2x2(0, 1.5).is_err());
    }

    #[test]
    fn invasion_4_is_orthonormal_basis() {
        assert_eq!(encode_invasion_4(0, 0).unwrap().matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(encode_invasion_4(1, 1).unwrap().matrix()[(3, 3)], c(1.0, 0.0));
        let states: Vec<CMatrix> = (0..4)
            .map(|i| encode_invasion_4(i / 2, i % 2).unwrap().matrix().clone())
            .collect();
        let sum = states.iter().fold(CMatrix::zeros(4, 4), |acc, s| acc + s);
        assert!(frobenius_norm(&(sum - identity(4))) < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                let overlap = (&states[i] * &states[j]).trace().re;
                assert_eq!(overlap, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn neverending_encoding() {
        let rho = encode_neverending(0, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(rho.dim(), 8);
        assert!((rho.purity() - 0.5).abs() < 1e-14);
        let pure_c = DensityMatrix::from_pure(basis_vector(2, 1)).unwrap();
        assert_eq!(encode_neverending(1, &pure_c).unwrap().rank(), 1);

        let mut rng = RngStream::new(1, 0);
        let rho_c = random_mixed_qubit(&mut rng);
        let rho = encode_neverending(1, &rho_c).unwrap();
        let reduced = partial_trace(rho.matrix(), &[2, 2, 2], &[0, 2]).unwrap();
        let expected = kron(&projector(&basis_vector(2, 1)), &projector(&uniform_superposition(2)));
        assert!(frobenius_norm(&(reduced - expected)) < 1e-12);
    }

    #[test]
    fn action_subsystem_povm() {
        let povm = povm_action_subsystem(2, 2);
        let e0 = kron(&identity(2), &projector(&basis_vector(2, 0)));
        assert_eq!(povm.element(0), &e0);
        for e in povm.elements() {
            assert!((e.trace().re - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rotated_povm() {
        let povm = povm_rotated(&identity(4), false).unwrap();
        for i in 0..4 {
            let rho = encode_invasion_4(i / 2, i % 2).unwrap();
            assert!(frobenius_norm(&(povm.element(i) - rho.matrix())) < 1e-15);
        }
        let merged = povm_rotated(&identity(4), true).unwrap();
        assert_eq!(merged.num_actions(), 2);
        assert_eq!(merged.element(0)[(1, 1)], c(1.0, 0.0));
        assert_eq!(merged.element(0)[(2, 2)], c(0.0, 0.0));
        let mut rng = RngStream::new(2, 0);
        let random = povm_rotated(&random_unitary(4, &mut rng), true).unwrap();
        let sum = random.elements().iter().fold(CMatrix::zeros(4, 4), |a, e| a + e);
        assert!(frobenius_norm(&(sum - identity(4))) < 1e-10);
        assert!(povm_rotated(&(identity(4) * c(2.0, 0.0)), false).is_err());
    }

    #[test]
    fn incomplete_povm_rejected() {
        let e = projector(&basis_vector(2, 0));
        assert!(PovmSet::new(vec![e]).is_err());
    }

    #[test]
    fn identity_memory_gives_uniform_policy() {
        let povm = povm_action_subsystem(2, 2);
        let snap = MemorySnapshot::from_unitary(identity(4));
        for p_coh in [0.0, 0.3, 1.0] {
            for s in 0..2 {
                let rho = encode_invasion_2x2(s, p_coh).unwrap();
                let dist = action_distribution(&snap, &rho, &povm).unwrap();
                assert!((dist[0] - 0.5).abs() < 1e-14 && (dist[1] - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn swap_memory_is_optimal() {
        let povm = povm_action_subsystem(2, 2);
        let snap = MemorySnapshot::from_unitary(swap());
        let mut rng = RngStream::new(3, 0);
        for s in 0..2 {
            let rho_a = DensityMatrix::random(2, &mut rng);
            let rho = DensityMatrix::from_pure(basis_vector(2, s)).unwrap().kron(&rho_a);
            let dist = action_distribution(&snap, &rho, &povm).unwrap();
            assert!((dist[s] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_matches_dense_trace() {
        let mut rng = RngStream::new(4, 0);
        let (h1, h2) = case_i_hamiltonians(4, &mut rng);
        let stack = HamiltonianStack::alternating(h1, h2, 5).unwrap();
        let h = ControlVector::from_vec((0..5).map(|_| rng.normal()).collect());
        let rho = DensityMatrix::random(4, &mut rng);
        let povm = povm_rotated(&random_unitary(4, &mut rng), false).unwrap();
        let snap = build_snapshot(&stack, &h).unwrap();
        let dist = action_distribution(&snap, &rho, &povm).unwrap();
        let pass = stack.forward(&h, &rho).unwrap();
        let fast = distribution_from_pass(&pass, &povm).unwrap();
        let u = snap.unitary();
        for a in 0..4 {
            // element-by-element trace, independent of the matrix product route
            let mut direct = c(0.0, 0.0);
            let out = u * rho.matrix() * u.adjoint();
            for i in 0..4 {
                for j in 0..4 {
                    direct += out[(i, j)] * povm.element(a)[(j, i)];
                }
            }
            assert!((dist[a] - direct.re).abs() < 1e-12);
            assert!((fast[a] - direct.re).abs() < 1e-12);
        }
        assert_eq!(dist.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn sampling() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            assert_eq!(sample_action(&[1.0, 0.0, 0.0], &mut rng), 0);
        }
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_action(&[0.25; 4], &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
        let draw = |seed| {
            let mut r = RngStream::new(seed, 1);
            (0..50).map(|_| sample_action(&[0.2, 0.3, 0.5], &mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }
}
