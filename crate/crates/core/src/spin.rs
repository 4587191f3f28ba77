//! Angular momentum operators in the `|j, m⟩` basis ordered `m = j, j-1, …, -j`.
//!
//! Spins are passed as twice their value so half-integers stay exact.

use num_complex::Complex;

use crate::linalg::CMatrix;
use crate::scalar::Real;

#[inline]
pub fn multiplicity(twice_j: u32) -> usize {
    twice_j as usize + 1
}

/// Projection `m` of basis index `k`.
#[inline]
pub fn m_of_index<T: Real>(twice_j: u32, k: usize) -> T {
    T::lit(twice_j as f64 * 0.5 - k as f64)
}

pub fn sz<T: Real>(twice_j: u32) -> CMatrix<T> {
    let n = multiplicity(twice_j);
    let diag: Vec<T> = (0..n).map(|k| m_of_index(twice_j, k)).collect();
    CMatrix::from_real_diagonal(&diag)
}

/// Raising operator; `⟨m+1|J+|m⟩ = sqrt(j(j+1) - m(m+1))`.
pub fn splus<T: Real>(twice_j: u32) -> CMatrix<T> {
    let n = multiplicity(twice_j);
    let j = T::lit(twice_j as f64 * 0.5);
    let mut op = CMatrix::zeros(n);
    for k in 1..n {
        let m: T = m_of_index(twice_j, k);
        let el = (j * (j + T::one()) - m * (m + T::one())).sqrt();
        op[(k - 1, k)] = Complex::new(el, T::zero());
    }
    op
}

pub fn sminus<T: Real>(twice_j: u32) -> CMatrix<T> {
    splus(twice_j).adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_of_ladder_operators() {
        for twice_j in [1u32, 2, 9] {
            let p = splus::<f64>(twice_j);
            let m = sminus::<f64>(twice_j);
            let comm = (&p * &m).sub(&(&m * &p));
            let two_sz = sz::<f64>(twice_j).scale(Complex::new(2.0, 0.0));
            assert!(comm.sub(&two_sz).max_abs() < 1e-12);
        }
    }
}
