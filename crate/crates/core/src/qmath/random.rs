use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{frobenius_norm, identity, CMatrix, DensityMatrix};

/// Seeded, reproducible random source.
///
/// Streams with equal `(seed, stream)` produce bitwise-identical draws, and
/// streams with different ids never overlap, so per-agent streams can be
/// derived from one master seed by a counter.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Complex standard normal, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Gaussian Hermitian matrix scaled to `‖H‖_F = √n`.
pub fn random_hermitian(n: usize, rng: &mut RngStream) -> CMatrix {
    assert!(n >= 1, "dimension must be positive");
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(rng.normal(), 0.0);
        for j in (i + 1)..n {
            let z = rng.complex_normal();
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let norm = frobenius_norm(&h);
    h * Complex64::new((n as f64).sqrt() / norm, 0.0)
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary(n: usize, rng: &mut RngStream) -> CMatrix {
    assert!(n >= 1, "dimension must be positive");
    let z = CMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Qubit state `(I + r·σ)/2` with Bloch vector uniform in the unit ball.
pub fn random_mixed_qubit(rng: &mut RngStream) -> DensityMatrix {
    let dir = loop {
        let v = Vector3::new(rng.normal(), rng.normal(), rng.normal());
        let norm = v.norm();
        if norm > 1e-12 {
            break v / norm;
        }
    };
    let radius = rng.uniform().cbrt();
    DensityMatrix::from_bloch(dir * radius)
}

pub(crate) fn bloch_matrix(r: &Vector3<f64>) -> CMatrix {
    let half = Complex64::new(0.5, 0.0);
    let mut m = identity(2) * half;
    m[(0, 0)] += Complex64::new(0.5 * r.z, 0.0);
    m[(1, 1)] -= Complex64::new(0.5 * r.z, 0.0);
    m[(0, 1)] = Complex64::new(0.5 * r.x, -0.5 * r.y);
    m[(1, 0)] = Complex64::new(0.5 * r.x, 0.5 * r.y);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{is_hermitian, is_unitary, trace};

    #[test]
    fn stream_determinism() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let mut other = RngStream::new(42, 8);
        let xs: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..100).map(|_| other.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn hermitian_is_hermitian_and_normalized() {
        let mut rng = RngStream::new(1, 1);
        for n in 1..10 {
            let h = random_hermitian(n, &mut rng);
            assert!(is_hermitian(&h, 1e-14));
            assert!((frobenius_norm(&h) - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_diagonal_mean_is_zero() {
        let mut rng = RngStream::new(2, 0);
        let draws = 10_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let h = random_hermitian(3, &mut rng);
            sum += (0..3).map(|i| h[(i, i)].re).sum::<f64>() / 3.0;
        }
        assert!((sum / draws as f64).abs() < 0.05);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = RngStream::new(3, 0);
        for n in 1..9 {
            let u = random_unitary(n, &mut rng);
            assert!(is_unitary(&u, 1e-10));
        }
        let u1 = random_unitary(1, &mut rng);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = RngStream::new(4, 0);
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|_| random_unitary(4, &mut rng)[(0, 0)].norm_sqr())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn bloch_center_is_maximally_mixed() {
        let rho = DensityMatrix::from_bloch(Vector3::zeros());
        assert!(frobenius_norm(&(rho.matrix() - identity(2) * Complex64::new(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn mixed_qubit_statistics() {
        let mut rng = RngStream::new(5, 0);
        let draws = 100_000;
        let mut purity = 0.0;
        for _ in 0..draws {
            let rho = random_mixed_qubit(&mut rng);
            assert!((trace(rho.matrix()).re - 1.0).abs() < 1e-12);
            let eig = crate::qmath::hermitian_eigen(rho.matrix()).unwrap();
            assert!(eig.values.iter().all(|&v| v > -1e-12 && v < 1.0 + 1e-12));
            purity += rho.purity();
        }
        let mean = purity / draws as f64;
        assert!((mean - 0.8).abs() < 0.01, "mean purity {mean}");
    }
}
