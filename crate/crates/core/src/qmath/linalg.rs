use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{CMatrix, CVector, HERMITIAN_TOL};
use crate::error::{Error, Result};

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Unit vector `|k⟩` of length `n`.
pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// `|v⟩⟨v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Entrywise check `|M_ij - conj(M_ji)| <= tol`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// `‖U†U − I‖_F <= tol`.
pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && frobenius_norm(&(u.adjoint() * u - identity(u.nrows()))) <= tol
}

/// Spectral decomposition `H = V diag(values) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, each renormalized to unit length.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(−i t H)`. Exactly the identity at `t = 0`.
    pub fn expm(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return identity(self.dim());
        }
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * t))
            .collect();
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    let scale = frobenius_norm(h).max(1.0);
    if !is_hermitian(h, HERMITIAN_TOL * scale) {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut vectors = eig.eigenvectors;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    Ok(HermitianEigen {
        values: eig.eigenvalues.iter().cloned().collect(),
        vectors,
    })
}

/// `exp(−i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn herm_expm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(hermitian_eigen(h)?.expm(t))
}

/// Kronecker product, entry `(i·rows(B) + k, j·cols(B) + l) = A_ij B_kl`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Trace over every subsystem not listed in `keep`.
///
/// `dims` lists the subsystem dimensions in tensor order; `keep` holds
/// indices into `dims` and the result is ordered as in `dims`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::invalid(format!(
            "subsystem dims {dims:?} do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::invalid("kept subsystem index out of range"));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let flat = |kept_idx: usize, env_idx: usize| -> usize {
        let mut offset = 0;
        let mut r = kept_idx;
        for (pos, &sub) in kept.iter().enumerate().rev() {
            let d = kept_dims[pos];
            offset += (r % d) * strides[sub];
            r /= d;
        }
        let mut r = env_idx;
        for (pos, &sub) in traced.iter().enumerate().rev() {
            let d = traced_dims[pos];
            offset += (r % d) * strides[sub];
            r /= d;
        }
        offset
    };

    let mut out = CMatrix::zeros(out_dim, out_dim);
    for i in 0..out_dim {
        for j in 0..out_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..env_dim {
                acc += m[(flat(i, e), flat(j, e))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}
