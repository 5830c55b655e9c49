use nalgebra::Vector3;
use num_complex::Complex64;

use super::random::bloch_matrix;
use super::{
    hermitian_eigen, is_hermitian, kron, kron_vec, projector, trace, CMatrix, CVector, RngStream,
    HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL,
};
use crate::error::{Error, Result};

/// Eigenvalues below this are dropped from the pure-state ensemble.
const ENSEMBLE_CUTOFF: f64 = 1e-14;

/// A validated quantum state.
///
/// Alongside the matrix we keep a pure-state ensemble `ρ = Σ w_i |v_i⟩⟨v_i|`
/// so that propagation through the memory can work on vectors.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    ensemble: Vec<(f64, CVector)>,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("density matrix must be square and non-empty"));
        }
        if !is_hermitian(&matrix, HERMITIAN_TOL) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invalid(format!("density matrix has trace {tr}")));
        }
        let eig = hermitian_eigen(&matrix)?;
        if eig.min_value() < -POSITIVITY_TOL {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {}",
                eig.min_value()
            )));
        }
        let ensemble = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > ENSEMBLE_CUTOFF)
            .map(|(j, &w)| (w, eig.vectors.column(j).into_owned()))
            .collect();
        Ok(Self { matrix, ensemble })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn from_pure(psi: CVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid(format!("state vector has norm {norm}")));
        }
        Ok(Self {
            matrix: projector(&psi),
            ensemble: vec![(1.0, psi)],
        })
    }

    /// Qubit state with Bloch vector `r`, `|r| <= 1`.
    pub fn from_bloch(r: Vector3<f64>) -> Self {
        Self::from_matrix(bloch_matrix(&r)).expect("Bloch vectors in the unit ball are valid states")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = 1.0 / dim as f64;
        Self {
            matrix: CMatrix::identity(dim, dim) * Complex64::new(w, 0.0),
            ensemble: (0..dim).map(|k| (w, super::basis_vector(dim, k))).collect(),
        }
    }

    /// Random full-rank state `G G† / Tr(G G†)` from a Ginibre matrix.
    pub fn random(dim: usize, rng: &mut RngStream) -> Self {
        let g = CMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
        let m = &g * g.adjoint();
        let tr = trace(&m).re;
        let m = m / Complex64::new(tr, 0.0);
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self::from_matrix(m).expect("Ginibre states are valid")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Weighted pure states whose mixture is this state.
    pub fn ensemble(&self) -> &[(f64, CVector)] {
        &self.ensemble
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn rank(&self) -> usize {
        self.ensemble.len()
    }

    /// `ρ ⊗ σ`.
    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        let ensemble = self
            .ensemble
            .iter()
            .flat_map(|(w1, v1)| {
                other
                    .ensemble
                    .iter()
                    .map(move |(w2, v2)| (w1 * w2, kron_vec(v1, v2)))
            })
            .collect();
        DensityMatrix {
            matrix: kron(&self.matrix, &other.matrix),
            ensemble,
        }
    }

    /// `U ρ U†` for unitary `U`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::invalid("unitary dimension does not match state"));
        }
        Ok(DensityMatrix {
            matrix: u * &self.matrix * u.adjoint(),
            ensemble: self.ensemble.iter().map(|(w, v)| (*w, u * v)).collect(),
        })
    }

    /// `(ρ + εI)/(1 + εd)`.
    pub fn with_identity_admixture(&self, eps: f64) -> Result<DensityMatrix> {
        let d = self.dim() as f64;
        let m = (&self.matrix + CMatrix::identity(self.dim(), self.dim()) * Complex64::new(eps, 0.0))
            / Complex64::new(1.0 + eps * d, 0.0);
        DensityMatrix::from_matrix(m)
    }
}
