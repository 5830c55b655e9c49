//! The agent's parametrized unitary memory `U(h) = U_n ⋯ U_2 U_1` with
//! `U_k = exp(−i h_k H_k)`, and the analytic derivatives of measurement
//! probabilities with respect to the controls `h_k`.
//!
//! Two evaluation routes exist. [`build_snapshot`] and
//! [`gradient_fixed_layers`] work with full matrices and cached prefix
//! products. [`HamiltonianStack::forward`] propagates the pure-state
//! ensemble of a percept through the layers and back-propagates the
//! measurement operator, which is what the agents use per cycle.

use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmath::{
    frobenius_norm, hermitian_eigen, identity, is_hermitian, kron, random_hermitian, CMatrix,
    CVector, DensityMatrix, HermitianEigen, RngStream, HERMITIAN_TOL, POSITIVITY_TOL,
};

/// A fixed Hermitian generator together with its spectral data.
#[derive(Debug, Clone)]
pub struct Generator {
    hamiltonian: CMatrix,
    eigen: HermitianEigen,
    // Split-layout copies of V and V† for the vector kernels.
    v_rows: SplitMatrix,
    vh_rows: SplitMatrix,
}

impl Generator {
    pub fn new(hamiltonian: CMatrix) -> Result<Self> {
        let eigen = hermitian_eigen(&hamiltonian)?;
        let d = eigen.dim();
        let v = &eigen.vectors;
        let v_rows = SplitMatrix::from_fn(d, |i, j| v[(i, j)]);
        let vh_rows = SplitMatrix::from_fn(d, |i, j| v[(j, i)].conj());
        Ok(Self {
            hamiltonian,
            eigen,
            v_rows,
            vh_rows,
        })
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    /// `exp(−i t H)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        self.eigen.expm(t)
    }

    /// Largest absolute eigenvalue, the operator norm of `H`.
    pub fn operator_norm(&self) -> f64 {
        self.eigen.max_abs_value()
    }
}

const LANES: usize = 4;

/// Complex vector stored as separate real and imaginary parts.
#[derive(Debug, Clone)]
struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn zeros(d: usize) -> Self {
        Self { re: vec![0.0; d], im: vec![0.0; d] }
    }

    fn from_complex<'a>(v: impl Iterator<Item = &'a Complex64>) -> Self {
        let (re, im) = v.map(|z| (z.re, z.im)).unzip();
        Self { re, im }
    }

    fn to_cvector(&self) -> CVector {
        CVector::from_iterator(self.re.len(), self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)))
    }

    /// Multiplies entry `j` by the phase `p_j`, or by its conjugate.
    fn mul_phases(&mut self, p: &Phases, conjugate: bool) {
        let sign = if conjugate { -1.0 } else { 1.0 };
        for j in 0..self.re.len() {
            let (c, s) = (p.cos[j], sign * p.sin[j]);
            let (r, i) = (self.re[j], self.im[j]);
            self.re[j] = r * c - i * s;
            self.im[j] = r * s + i * c;
        }
    }
}

/// `exp(−i h λ_j)` for one layer, split into cosine and sine.
#[derive(Debug, Clone)]
struct Phases {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// Row-major complex matrix in split layout.
#[derive(Debug, Clone)]
struct SplitMatrix {
    d: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitMatrix {
    fn from_fn(d: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = f(i, j);
                re.push(z.re);
                im.push(z.im);
            }
        }
        Self { d, re, im }
    }

    /// `y = M x`. Lane-wise partial sums keep the inner loop vectorizable.
    fn apply(&self, x: &Split, y: &mut Split) {
        let d = self.d;
        let rows = self.re.chunks_exact(d).zip(self.im.chunks_exact(d));
        for ((ar, ai), (yr, yi)) in rows.zip(y.re.iter_mut().zip(y.im.iter_mut())) {
            let mut rr = [0.0; LANES];
            let mut ii = [0.0; LANES];
            let mut ri = [0.0; LANES];
            let mut ir = [0.0; LANES];
            let a = ar.chunks_exact(LANES).zip(ai.chunks_exact(LANES));
            let b = x.re.chunks_exact(LANES).zip(x.im.chunks_exact(LANES));
            for ((ar, ai), (xr, xi)) in a.zip(b) {
                for l in 0..LANES {
                    rr[l] += ar[l] * xr[l];
                    ii[l] += ai[l] * xi[l];
                    ri[l] += ar[l] * xi[l];
                    ir[l] += ai[l] * xr[l];
                }
            }
            let (mut sr, mut si) = (0.0, 0.0);
            for l in 0..LANES {
                sr += rr[l] - ii[l];
                si += ri[l] + ir[l];
            }
            for j in d / LANES * LANES..d {
                sr += ar[j] * x.re[j] - ai[j] * x.im[j];
                si += ar[j] * x.im[j] + ai[j] * x.re[j];
            }
            *yr = sr;
            *yi = si;
        }
    }
}

/// Control parameters `h`, one real strength per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(Vec<f64>);

impl ControlVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(h: Vec<f64>) -> Self {
        Self(h)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean length `|h|`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Deref for ControlVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ControlVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Row-major change of basis between the eigenbases of two consecutive layers.
#[derive(Debug)]
struct Transition {
    /// `V_k† V_{k−1}`.
    forward: SplitMatrix,
    /// `V_{k−1}† V_k`.
    backward: SplitMatrix,
}

impl Transition {
    fn new(prev: &Generator, cur: &Generator) -> Self {
        let w = cur.eigen.vectors.adjoint() * &prev.eigen.vectors;
        let d = w.nrows();
        Self {
            forward: SplitMatrix::from_fn(d, |i, j| w[(i, j)]),
            backward: SplitMatrix::from_fn(d, |i, j| w[(j, i)].conj()),
        }
    }
}

/// Ordered layers, each referring to one of a small set of generators.
#[derive(Debug, Clone)]
pub struct HamiltonianStack {
    dim: usize,
    generators: Vec<Arc<Generator>>,
    layers: Vec<usize>,
    /// Entry `k − 1` maps layer `k − 1`'s eigenbasis to layer `k`'s.
    transitions: Vec<Arc<Transition>>,
}

fn build_transitions(generators: &[Arc<Generator>], layers: &[usize]) -> Vec<Arc<Transition>> {
    let mut cache: Vec<((usize, usize), Arc<Transition>)> = Vec::new();
    layers
        .windows(2)
        .map(|w| {
            let key = (w[0], w[1]);
            if let Some((_, t)) = cache.iter().find(|(k, _)| *k == key) {
                return t.clone();
            }
            let t = Arc::new(Transition::new(&generators[w[0]], &generators[w[1]]));
            cache.push((key, t.clone()));
            t
        })
        .collect()
}

impl HamiltonianStack {
    /// `n` layers alternating `H1, H2, H1, …` starting with `H1` as the
    /// first layer applied to the input.
    pub fn alternating(h1: CMatrix, h2: CMatrix, n: usize) -> Result<Self> {
        if h1.shape() != h2.shape() {
            return Err(Error::invalid("alternating Hamiltonians differ in dimension"));
        }
        let generators = vec![Arc::new(Generator::new(h1)?), Arc::new(Generator::new(h2)?)];
        let layers: Vec<usize> = (0..n).map(|k| k % 2).collect();
        Ok(Self {
            dim: generators[0].dim(),
            transitions: build_transitions(&generators, &layers),
            generators,
            layers,
        })
    }

    /// One generator per layer, in application order.
    pub fn from_layers(hamiltonians: Vec<CMatrix>) -> Result<Self> {
        let first = hamiltonians
            .first()
            .ok_or_else(|| Error::invalid("stack needs at least one layer"))?;
        let dim = first.nrows();
        let generators = hamiltonians
            .into_iter()
            .map(|h| {
                if h.nrows() != dim {
                    return Err(Error::invalid("layers differ in dimension"));
                }
                Generator::new(h).map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let layers: Vec<usize> = (0..generators.len()).collect();
        Ok(Self {
            dim,
            transitions: build_transitions(&generators, &layers),
            generators,
            layers,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of layers, equal to the number of controls.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Generator of layer `k` (0-based, in application order).
    pub fn generator(&self, k: usize) -> &Generator {
        &self.generators[self.layers[k]]
    }

    pub fn layer_hamiltonian(&self, k: usize) -> &CMatrix {
        self.generator(k).hamiltonian()
    }

    /// The same generators with `n` alternating layers.
    pub fn with_len(&self, n: usize) -> Self {
        let period = self.generators.len();
        let layers: Vec<usize> = (0..n).map(|k| k % period).collect();
        Self {
            dim: self.dim,
            transitions: build_transitions(&self.generators, &layers),
            generators: self.generators.clone(),
            layers,
        }
    }

    fn check_controls(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.len() {
            return Err(Error::invalid(format!(
                "control vector has {} entries, stack has {} layers",
                h.len(),
                self.len()
            )));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("control vector has non-finite entries"));
        }
        Ok(())
    }

    /// `U(h)` as a matrix.
    pub fn unitary(&self, h: &[f64]) -> Result<CMatrix> {
        self.check_controls(h)?;
        let mut u = identity(self.dim);
        for (k, &hk) in h.iter().enumerate() {
            u = self.generator(k).unitary(hk) * u;
        }
        Ok(u)
    }

    /// Propagate the pure-state ensemble of `rho` through `U(h)`, keeping
    /// the per-layer intermediates needed for gradients.
    pub fn forward(&self, h: &[f64], rho: &DensityMatrix) -> Result<ForwardPass> {
        self.check_controls(h)?;
        if rho.dim() != self.dim {
            return Err(Error::invalid("percept state dimension does not match memory"));
        }
        let d = self.dim;
        let n = self.len();
        if h.iter().all(|&x| x == 0.0) {
            // U = I: the output is the input, with no rounding.
            let members = rho
                .ensemble()
                .iter()
                .map(|(weight, psi)| Member { weight: *weight, coords: Vec::new(), output: psi.clone() })
                .collect();
            return Ok(ForwardPass { phases: Vec::new(), members, at_identity: true });
        }
        let phases: Vec<Phases> = (0..n)
            .map(|k| {
                let (sin, cos) = self.generator(k).eigen().values.iter().map(|&l| (-h[k] * l).sin_cos()).unzip();
                Phases { cos, sin }
            })
            .collect();
        let mut members = Vec::with_capacity(rho.rank());
        for (weight, psi) in rho.ensemble() {
            let psi = Split::from_complex(psi.iter());
            let mut coords: Vec<Split> = Vec::with_capacity(n);
            for k in 0..n {
                // Stay in eigen-coordinates: y_k = D_k (V_k† V_{k−1}) y_{k−1}.
                let mut y = Split::zeros(d);
                if k == 0 {
                    self.generator(0).vh_rows.apply(&psi, &mut y);
                } else {
                    self.transitions[k - 1].forward.apply(&coords[k - 1], &mut y);
                }
                y.mul_phases(&phases[k], false);
                coords.push(y);
            }
            let output = match coords.last() {
                Some(last) => {
                    let mut out = Split::zeros(d);
                    self.generator(n - 1).v_rows.apply(last, &mut out);
                    out.to_cvector()
                }
                None => psi.to_cvector(),
            };
            members.push(Member {
                weight: *weight,
                coords,
                output,
            });
        }
        Ok(ForwardPass { phases, members, at_identity: false })
    }
}

#[derive(Debug, Clone)]
struct Member {
    weight: f64,
    /// `V_k† ψ_k` after each layer.
    coords: Vec<Split>,
    output: CVector,
}

/// Result of pushing a percept state through the memory.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    phases: Vec<Phases>,
    members: Vec<Member>,
    at_identity: bool,
}

impl ForwardPass {
    /// `Tr[U ρ U† Π]`.
    pub fn probability(&self, pi: &CMatrix) -> f64 {
        self.members
            .iter()
            .map(|m| m.weight * m.output.dotc(&(pi * &m.output)).re)
            .sum()
    }

    /// Output ensemble `{(w_i, U|v_i⟩)}`.
    pub fn outputs(&self) -> impl Iterator<Item = (f64, &CVector)> {
        self.members.iter().map(|m| (m.weight, &m.output))
    }

    /// `∂/∂h_k Tr[U ρ U† Π]` for every layer.
    pub fn gradient(&self, stack: &HamiltonianStack, pi: &CMatrix) -> Vec<f64> {
        let n = stack.len();
        let d = stack.dim();
        let mut grad = vec![0.0; n];
        if self.at_identity {
            // ∂p/∂h_k = 2 Im⟨Πψ|H_k ψ⟩ at h = 0.
            for m in &self.members {
                let chi = pi * &m.output;
                for (k, g) in grad.iter_mut().enumerate() {
                    *g += 2.0 * m.weight * chi.dotc(&(stack.layer_hamiltonian(k) * &m.output)).im;
                }
            }
            return grad;
        }
        let mut x = Split::zeros(d);
        let mut tmp = Split::zeros(d);
        for m in &self.members {
            if n == 0 {
                break;
            }
            let chi = Split::from_complex((pi * &m.output).iter());
            stack.generator(n - 1).vh_rows.apply(&chi, &mut x);
            for k in (0..n).rev() {
                let lambda = &stack.generator(k).eigen.values;
                let z = &m.coords[k];
                // Im Σ_j conj(x_j) z_j λ_j
                let mut acc = 0.0;
                for j in 0..d {
                    acc += lambda[j] * (x.re[j] * z.im[j] - x.im[j] * z.re[j]);
                }
                grad[k] += 2.0 * m.weight * acc;
                if k > 0 {
                    x.mul_phases(&self.phases[k], true);
                    stack.transitions[k - 1].backward.apply(&x, &mut tmp);
                    std::mem::swap(&mut x, &mut tmp);
                }
            }
        }
        grad
    }
}

/// `U(h)` together with the prefix products `U_k ⋯ U_1`.
#[derive(Debug, Clone)]
pub struct MemorySnapshot {
    unitary: CMatrix,
    prefixes: Vec<CMatrix>,
}

impl MemorySnapshot {
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `prefixes()[k] = U_{k+1} ⋯ U_1` (0-based `k`).
    pub fn prefixes(&self) -> &[CMatrix] {
        &self.prefixes
    }

    /// Snapshot of an arbitrary unitary with no layer structure.
    pub fn from_unitary(unitary: CMatrix) -> Self {
        Self {
            unitary,
            prefixes: Vec::new(),
        }
    }
}

pub fn build_snapshot(stack: &HamiltonianStack, h: &ControlVector) -> Result<MemorySnapshot> {
    stack.check_controls(h)?;
    let mut prefixes = Vec::with_capacity(h.len());
    let mut u = identity(stack.dim());
    for (k, &hk) in h.iter().enumerate() {
        u = stack.generator(k).unitary(hk) * u;
        prefixes.push(u.clone());
    }
    Ok(MemorySnapshot {
        unitary: u,
        prefixes,
    })
}

/// Validates `0 <= Π <= I`.
pub(crate) fn check_effect(pi: &CMatrix, dim: usize) -> Result<()> {
    if pi.nrows() != dim || pi.ncols() != dim {
        return Err(Error::invalid("measurement operator dimension mismatch"));
    }
    if !is_hermitian(pi, HERMITIAN_TOL.max(1e-10)) {
        return Err(Error::invalid("measurement operator is not Hermitian"));
    }
    let eig = hermitian_eigen(pi)?;
    if eig.min_value() < -POSITIVITY_TOL || eig.values.iter().any(|&v| v > 1.0 + POSITIVITY_TOL) {
        return Err(Error::invalid("measurement operator is not between 0 and I"));
    }
    Ok(())
}

fn im_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // Im Tr[A B] without forming the product.
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.im
}

/// `∂p/∂h_k = 2 Im Tr[ρ U†Π U P_k† H_k P_k]` with `P_k` the prefix product
/// through layer `k`.
pub fn gradient_fixed_layers(
    snap: &MemorySnapshot,
    stack: &HamiltonianStack,
    rho: &DensityMatrix,
    pi: &CMatrix,
) -> Result<Vec<f64>> {
    let d = stack.dim();
    if rho.dim() != d || snap.unitary.nrows() != d {
        return Err(Error::invalid("state, snapshot and stack dimensions differ"));
    }
    if snap.prefixes.len() != stack.len() {
        return Err(Error::invalid("snapshot does not belong to this stack"));
    }
    check_effect(pi, d)?;
    let u = &snap.unitary;
    let heisenberg = u.adjoint() * pi * u;
    let b = rho.matrix() * heisenberg;
    Ok(snap
        .prefixes
        .iter()
        .enumerate()
        .map(|(k, p)| {
            // Tr[B P†HP] = Tr[(P B P†) H]
            let rotated = p * &b * p.adjoint();
            2.0 * im_trace_product(&rotated, stack.layer_hamiltonian(k))
        })
        .collect())
}

/// Derivative for a new layer `exp(−i δ H)` multiplied onto `U` from the
/// left, at `δ = 0`: `2 Im Tr[ρ U† Π H U]`.
pub fn gradient_add_layer(
    u: &CMatrix,
    generator: &CMatrix,
    rho: &DensityMatrix,
    pi: &CMatrix,
) -> Result<f64> {
    let d = u.nrows();
    if rho.dim() != d || generator.nrows() != d {
        return Err(Error::invalid("dimension mismatch"));
    }
    if !is_hermitian(generator, HERMITIAN_TOL * frobenius_norm(generator).max(1.0)) {
        return Err(Error::invalid("layer generator is not Hermitian"));
    }
    check_effect(pi, d)?;
    let a = rho.matrix() * u.adjoint() * pi;
    let b = generator * u;
    Ok(2.0 * im_trace_product(&a, &b))
}

/// Two independent random Hamiltonians on the full space.
pub fn case_i_hamiltonians(dim: usize, rng: &mut RngStream) -> (CMatrix, CMatrix) {
    assert!(dim >= 2, "case I needs dim >= 2");
    let h1 = random_hermitian(dim, rng);
    let h2 = random_hermitian(dim, rng);
    (h1, h2)
}

/// Structured pair `H1 = H_S¹⊗I + I⊗H_A¹`, `H2 = H_S²⊗H_A²`, returned with
/// the four local factors `[H_S¹, H_A¹, H_S², H_A²]`.
pub fn case_ii_hamiltonians_with_factors(
    dim_s: usize,
    dim_a: usize,
    rng: &mut RngStream,
) -> ((CMatrix, CMatrix), [CMatrix; 4]) {
    assert!(dim_s >= 2 && dim_a >= 2, "case II needs subsystem dims >= 2");
    let hs1 = random_hermitian(dim_s, rng);
    let ha1 = random_hermitian(dim_a, rng);
    let hs2 = random_hermitian(dim_s, rng);
    let ha2 = random_hermitian(dim_a, rng);
    let h1 = kron(&hs1, &identity(dim_a)) + kron(&identity(dim_s), &ha1);
    let h2 = kron(&hs2, &ha2);
    ((h1, h2), [hs1, ha1, hs2, ha2])
}

pub fn case_ii_hamiltonians(dim_s: usize, dim_a: usize, rng: &mut RngStream) -> (CMatrix, CMatrix) {
    case_ii_hamiltonians_with_factors(dim_s, dim_a, rng).0
}

/// Gram–Schmidt under `⟨A,B⟩ = Tr(A†B)`, both outputs scaled to `‖·‖_F = √n`.
pub fn schmidt_orthonormalize(h1: &CMatrix, h2: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if h1.shape() != h2.shape() || !h1.is_square() {
        return Err(Error::invalid("Hamiltonians must be square and of equal dimension"));
    }
    let n = h1.nrows() as f64;
    let n1 = frobenius_norm(h1);
    if n1 == 0.0 {
        return Err(Error::Degenerate("first Hamiltonian is zero".into()));
    }
    let e1 = h1 / Complex64::new(n1, 0.0);
    let overlap = (e1.adjoint() * h2).trace();
    let residual = h2 - &e1 * overlap;
    let nr = frobenius_norm(&residual);
    if nr <= 1e-10 * frobenius_norm(h2).max(1e-300) {
        return Err(Error::Degenerate("Hamiltonians are parallel".into()));
    }
    let scale = Complex64::new(n.sqrt(), 0.0);
    let r = residual / Complex64::new(nr, 0.0);
    // The overlap of two Hermitian matrices is real, so both stay Hermitian.
    let herm = |m: CMatrix| (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok((herm(e1 * scale), herm(r * scale)))
}
