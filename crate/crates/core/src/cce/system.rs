//! Dense dynamics of a single cluster.
//!
//! Basis states are bit masks over the cluster spins, bit set meaning
//! `m = −1/2`. Every Hamiltonian here conserves the total `I^z`, so all
//! matrices are handled block by block in sectors of fixed popcount.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, HermitianEigen};
use crate::noise::LineSpectrum;
use crate::pulse::PulseSequence;
use crate::scalar::Real;

pub const MAX_CLUSTER: usize = 3;

#[derive(Clone, Debug)]
pub struct ClusterSystem<T> {
    n: usize,
    hyperfine: Vec<T>,
    /// static detuning per spin: mean field plus uniform Zeeman term, rad/s
    detuning: Vec<T>,
    /// `(a, b, D)` over local indices
    bonds: Vec<(usize, usize, T)>,
    sectors: Vec<Vec<usize>>,
}

#[inline]
fn m_of<T: Real>(state: usize, i: usize) -> T {
    if state >> i & 1 == 0 {
        T::lit(0.5)
    } else {
        T::lit(-0.5)
    }
}

impl<T: Real> ClusterSystem<T> {
    pub fn new(hyperfine: Vec<T>, detuning: Vec<T>, bonds: Vec<(usize, usize, T)>) -> Result<Self> {
        let n = hyperfine.len();
        if n > MAX_CLUSTER {
            return Err(Error::ClusterTooLarge {
                size: n,
                max: MAX_CLUSTER,
            });
        }
        assert_eq!(detuning.len(), n);
        let mut sectors = vec![Vec::new(); n + 1];
        for s in 0..1usize << n {
            sectors[s.count_ones() as usize].push(s);
        }
        Ok(Self {
            n,
            hyperfine,
            detuning,
            bonds,
            sectors,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `p·β^z + Σ h_i I^z_i + Σ D (I⁺I⁻ + I⁻I⁺) − 4 D I^z I^z` in one sector.
    pub fn sector_hamiltonian(&self, sector: usize, p: T) -> CMatrix<T> {
        let states = &self.sectors[sector];
        let four = T::lit(4.0);
        CMatrix::from_fn(states.len(), |r, c| {
            let (a, b) = (states[r], states[c]);
            if r == c {
                let mut e = T::zero();
                for i in 0..self.n {
                    e += m_of::<T>(a, i) * (p * self.hyperfine[i] + self.detuning[i]);
                }
                for &(i, j, d) in &self.bonds {
                    e -= four * d * m_of::<T>(a, i) * m_of::<T>(a, j);
                }
                Complex::new(e, T::zero())
            } else {
                let flip = a ^ b;
                self.bonds
                    .iter()
                    .find(|&&(i, j, _)| flip == (1 << i | 1 << j) && (a >> i & 1) != (a >> j & 1))
                    .map_or(Complex::zero(), |&(_, _, d)| Complex::new(d, T::zero()))
            }
        })
    }

    /// Diagonal of `β^z = Σ A_i I^z_i` in one sector.
    pub fn sector_beta(&self, sector: usize) -> Vec<T> {
        self.sectors[sector]
            .iter()
            .map(|&s| (0..self.n).map(|i| self.hyperfine[i] * m_of::<T>(s, i)).sum())
            .collect()
    }

    /// `Tr[U₋† U₊] / 2^n` on each time in `times`.
    pub fn coherence(
        &self,
        p_plus: T,
        p_minus: T,
        seq: &PulseSequence<T>,
        times: &[T],
    ) -> Result<Vec<Complex<T>>> {
        let bounds = seq.boundaries();
        let lengths: Vec<T> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
        let mut distinct: Vec<T> = Vec::new();
        let ids: Vec<usize> = lengths
            .iter()
            .map(|&len| {
                let tol = T::epsilon() * T::lit(16.0);
                match distinct.iter().position(|&d| (d - len).abs() <= tol) {
                    Some(k) => k,
                    None => {
                        distinct.push(len);
                        distinct.len() - 1
                    }
                }
            })
            .collect();

        let mut out = vec![Complex::<T>::zero(); times.len()];
        for sector in 0..=self.n {
            let eig_p = eigh(&self.sector_hamiltonian(sector, p_plus))?;
            let eig_m = eigh(&self.sector_hamiltonian(sector, p_minus))?;
            for (acc, &t) in out.iter_mut().zip(times) {
                *acc += sector_overlap(&eig_p, &eig_m, &distinct, &ids, t);
            }
        }
        let norm = T::from_usize_lossy(1 << self.n);
        Ok(out.into_iter().map(|z| z / norm).collect())
    }

    /// `Tr[e^{iHt} β e^{−iHt} β] / 2^n` under `H = p·β^z + H_bath`, as lines.
    pub fn correlation_lines(&self, p: T) -> Result<LineSpectrum<T>> {
        let norm = T::from_usize_lossy(1 << self.n);
        let mut spec = LineSpectrum::new();
        for sector in 0..=self.n {
            let eig = eigh(&self.sector_hamiltonian(sector, p))?;
            let beta = CMatrix::from_real_diagonal(&self.sector_beta(sector));
            let b = eig.to_eigenbasis(&beta);
            let dim = eig.values.len();
            let scale = eig.values.iter().fold(T::zero(), |m, e| m.max(e.abs()));
            for a in 0..dim {
                spec.static_weight += b[(a, a)].norm_sqr() / norm;
                for c in a + 1..dim {
                    let w = T::lit(2.0) * b[(a, c)].norm_sqr() / norm;
                    let omega = (eig.values[c] - eig.values[a]).abs();
                    if omega <= T::epsilon() * scale {
                        spec.static_weight += w;
                    } else {
                        spec.push(omega, w);
                    }
                }
            }
        }
        Ok(spec)
    }
}

/// `Tr[U₋† U₊]` within one sector at total time `t`.
fn sector_overlap<T: Real>(
    eig_p: &HermitianEigen<T>,
    eig_m: &HermitianEigen<T>,
    distinct: &[T],
    ids: &[usize],
    t: T,
) -> Complex<T> {
    let dim = eig_p.values.len();
    if t == T::zero() {
        return Complex::new(T::from_usize_lossy(dim), T::zero());
    }
    if dim == 1 {
        // scalar phases commute
        let (mut phase_p, mut phase_m) = (T::zero(), T::zero());
        for (k, &id) in ids.iter().enumerate() {
            let dt = distinct[id] * t;
            let (a, b) = if k % 2 == 0 {
                (eig_p.values[0], eig_m.values[0])
            } else {
                (eig_m.values[0], eig_p.values[0])
            };
            phase_p += a * dt;
            phase_m += b * dt;
        }
        return crate::scalar::cis(phase_m - phase_p);
    }
    let prop_p: Vec<CMatrix<T>> = distinct.iter().map(|&d| eig_p.propagator(d * t)).collect();
    let prop_m: Vec<CMatrix<T>> = distinct.iter().map(|&d| eig_m.propagator(d * t)).collect();
    let mut u_p = CMatrix::identity(dim);
    let mut u_m = CMatrix::identity(dim);
    for (k, &id) in ids.iter().enumerate() {
        let (a, b) = if k % 2 == 0 {
            (&prop_p[id], &prop_m[id])
        } else {
            (&prop_m[id], &prop_p[id])
        };
        u_p = a * &u_p;
        u_m = b * &u_m;
    }
    u_m.inner(&u_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_sector_structure() {
        let sys = ClusterSystem::<f64>::new(vec![1.0, 3.0], vec![0.0, 0.0], vec![(0, 1, 0.5)]).unwrap();
        let h = sys.sector_hamiltonian(1, 1.0);
        assert_eq!(h.dim(), 2);
        // states 0b01 (↓↑) and 0b10 (↑↓)
        assert!((h[(0, 1)].re - 0.5).abs() < 1e-15);
        assert!((h[(0, 0)].re - (-0.5 + 1.5 + 0.5)).abs() < 1e-15);
        let h0 = sys.sector_hamiltonian(0, 1.0);
        assert!((h0[(0, 0)].re - (2.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn identical_branches_give_unity() {
        let sys = ClusterSystem::new(
            vec![1e3, -2e3, 5e2],
            vec![10.0, 0.0, -3.0],
            vec![(0, 1, 40.0), (1, 2, -25.0)],
        )
        .unwrap();
        let seq = PulseSequence::cpmg(3).unwrap();
        for z in sys.coherence(0.3, 0.3, &seq, &[0.0, 1e-3, 0.1]).unwrap() {
            assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn too_large() {
        assert!(matches!(
            ClusterSystem::<f64>::new(vec![0.0; 4], vec![0.0; 4], vec![]),
            Err(Error::ClusterTooLarge { size: 4, max: 3 })
        ));
    }

    #[test]
    fn correlation_at_zero_is_trace() {
        let sys = ClusterSystem::<f64>::new(vec![2.0, 5.0], vec![0.0, 0.0], vec![(0, 1, 1.5)]).unwrap();
        let lines = sys.correlation_lines(0.7).unwrap();
        assert!((lines.total_weight() - (4.0 + 25.0) / 4.0).abs() < 1e-12);
    }
}
