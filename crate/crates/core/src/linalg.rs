//! Small dense complex matrices and a Hermitian eigensolver.
//!
//! Cluster Hilbert spaces never exceed dimension 8 and the donor space is 20,
//! so a cyclic Jacobi solver is both fast enough and accurate to a few ulps.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cis_neg, Real};

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `Tr[self† · other]` without forming the product.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.conj() * b)
            .sum()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let n = other.dim;
        Self::from_fn(self.dim * n, |r, c| {
            self[(r / n, c / n)] * other[(r % n, c % n)]
        })
    }

    /// Largest absolute entry of `self - self†`.
    pub fn hermiticity_residual(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

/// Eigen-decomposition `H = V diag(values) V†` of a Hermitian matrix.
///
/// Eigenvalues are ascending; column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `exp(-i H dt)`.
    pub fn propagator(&self, dt: T) -> CMatrix<T> {
        let n = self.values.len();
        let phases: Vec<Complex<T>> = self.values.iter().map(|&e| cis_neg(e * dt)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * phases[k] * v[(c, k)].conj())
                .sum()
        })
    }

    /// Matrix elements of `op` in the eigenbasis, `V† op V`.
    pub fn to_eigenbasis(&self, op: &CMatrix<T>) -> CMatrix<T> {
        &(&self.vectors.adjoint() * op) * &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex<T>> {
        (0..self.values.len()).map(|r| self.vectors[(r, k)]).collect()
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
pub fn eigh<T: Real>(h: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.max_abs().max(T::min_positive_value());
    let threshold = scale * T::epsilon() * T::lit(0.5);

    for i in 0..n {
        a[(i, i)].im = T::zero();
    }

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence { dim: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Annihilates `a[(p, q)]` with the unitary `G = diag(1, e^{-iφ}) · R(θ)`.
fn rotate<T: Real>(a: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let n = a.dim();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (mag + mag);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
        sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = phase.conj() * (-s);
    let g_qq = phase.conj() * c;

    // columns: A ← A G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
    // rows: A ← G† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)].im = T::zero();
    a[(q, q)].im = T::zero();
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            m[(r, r)] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
            for c in (r + 1)..n {
                let z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(r, c)] = z;
                m[(c, r)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for (n, seed) in [(2, 1), (4, 2), (8, 3), (20, 4)] {
            let h = random_hermitian(n, seed);
            let eig = eigh(&h).unwrap();
            let d = CMatrix::from_real_diagonal(&eig.values);
            let back = &(&eig.vectors * &d) * &eig.vectors.adjoint();
            assert!(back.sub(&h).max_abs() < 1e-13, "n={n}");
            let gram = &eig.vectors.adjoint() * &eig.vectors;
            assert!(gram.sub(&CMatrix::identity(n)).max_abs() < 1e-13);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn propagator_is_unitary_and_composes() {
        let h = random_hermitian(8, 9);
        let eig = eigh(&h).unwrap();
        let u1 = eig.propagator(0.3);
        let u2 = eig.propagator(0.7);
        let u = eig.propagator(1.0);
        assert!((&u1 * &u2).sub(&u).max_abs() < 1e-13);
        assert!((&u.adjoint() * &u).sub(&CMatrix::identity(8)).max_abs() < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let h64 = random_hermitian(4, 5);
        let h32 = CMatrix::<f32>::from_fn(4, |r, c| {
            let z = h64[(r, c)];
            Complex::new(z.re as f32, z.im as f32)
        });
        let e64 = eigh(&h64).unwrap();
        let e32 = eigh(&h32).unwrap();
        for (a, b) in e64.values.iter().zip(&e32.values) {
            assert!((a - *b as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let h = CMatrix::from_real_diagonal(&[3.0, -1.0, 2.0]);
        let eig = eigh(&h).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
    }
}
