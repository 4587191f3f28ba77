//! Bi donor electron–nuclear spin levels.
//!
//! `H = ω_e S^z − ω_n I^z + A S·I` with `ω = γ B`, all in rad/s. The Hamiltonian
//! conserves `m_F = m_S + m_I`, so for `S = 1/2` it splits into blocks of size
//! at most two which are diagonalized in closed form. A dense path over the full
//! product space is kept for cross-validation.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix};
use crate::scalar::Real;
use crate::spin;

/// Electron spin is fixed at 1/2; the nuclear spin is configurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DonorParams<T> {
    pub electron_twice: u32,
    pub nuclear_twice: u32,
    /// Isotropic hyperfine coupling `A0`, rad/s.
    pub hyperfine: T,
    /// Electron gyromagnetic ratio, rad/s/T.
    pub gamma_e: T,
    /// Donor nuclear gyromagnetic ratio, rad/s/T.
    pub gamma_n: T,
}

impl<T: Real> DonorParams<T> {
    /// ²⁰⁹Bi in silicon: `A0/2π = 1.4754 GHz`, `γ_e/2π = 27.997 GHz/T`,
    /// `γ_n/2π = 6.963 MHz/T`, `I = 9/2`.
    pub fn bismuth() -> Self {
        let two_pi = T::lit(std::f64::consts::TAU);
        Self {
            electron_twice: 1,
            nuclear_twice: 9,
            hyperfine: two_pi * T::lit(1.4754e9),
            gamma_e: two_pi * T::lit(27.997e9),
            gamma_n: two_pi * T::lit(6.963e6),
        }
    }

    pub fn dim(&self) -> usize {
        spin::multiplicity(self.electron_twice) * spin::multiplicity(self.nuclear_twice)
    }

    pub fn validate(&self) -> Result<()> {
        if self.electron_twice != 1 {
            return Err(Error::InvalidParameter(
                "electron spin must be 1/2".into(),
            ));
        }
        if self.nuclear_twice == 0 {
            return Err(Error::InvalidParameter("nuclear spin must be > 0".into()));
        }
        if !(self.hyperfine > T::zero()) {
            return Err(Error::InvalidParameter("A0 must be positive".into()));
        }
        Ok(())
    }

    fn largest_f_twice(&self) -> i32 {
        (self.nuclear_twice + self.electron_twice) as i32
    }
}

/// Adiabatic `|F, m_F⟩` tag, stored as twice the quantum numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub f_twice: i32,
    pub m_f_twice: i32,
}

impl StateLabel {
    pub fn new(f: i32, m_f: i32) -> Self {
        Self {
            f_twice: 2 * f,
            m_f_twice: 2 * m_f,
        }
    }
}

fn fmt_half(v: i32) -> String {
    if v % 2 == 0 {
        format!("{}", v / 2)
    } else {
        format!("{}/2", v)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", fmt_half(self.f_twice), fmt_half(self.m_f_twice))
    }
}

fn parse_half(s: &str) -> Option<i32> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        (den.trim() == "2").then_some(())?;
        num.trim().parse::<i32>().ok()
    } else {
        s.parse::<i32>().ok().map(|v| 2 * v)
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    /// Accepts `F,mF` with integers or halves, e.g. `5,-1` or `9/2,-7/2`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('|').trim_end_matches(['>', '⟩']);
        let (f, m) = trimmed
            .split_once(',')
            .ok_or_else(|| Error::parse("state label", format!("expected F,mF, got {s:?}")))?;
        match (parse_half(f), parse_half(m)) {
            (Some(f_twice), Some(m_f_twice)) => Ok(Self { f_twice, m_f_twice }),
            _ => Err(Error::parse("state label", format!("bad numbers in {s:?}"))),
        }
    }
}

/// One eigenstate of the donor Hamiltonian.
#[derive(Clone, Debug)]
pub struct Level<T> {
    pub label: StateLabel,
    pub energy: T,
    /// Real amplitudes over the product basis `|m_S, m_I⟩`.
    pub state: Vec<T>,
    /// `⟨S^z⟩`
    pub sz: T,
    /// `⟨I^z⟩`
    pub iz: T,
}

#[derive(Clone, Debug)]
pub struct LevelSet<T> {
    pub field: T,
    /// Grouped by ascending `m_F`, descending energy within a block.
    pub levels: Vec<Level<T>>,
}

impl<T: Real> LevelSet<T> {
    /// Looks up a level; for the two stretched states (single-state blocks)
    /// the `F` part of the label is not checked.
    pub fn get(&self, label: StateLabel) -> Result<&Level<T>> {
        if let Some(l) = self.levels.iter().find(|l| l.label == label) {
            return Ok(l);
        }
        let block: Vec<_> = self
            .levels
            .iter()
            .filter(|l| l.label.m_f_twice == label.m_f_twice)
            .collect();
        match block.as_slice() {
            [only] => Ok(only),
            _ => Err(Error::UnknownLabel(label.to_string())),
        }
    }

    pub fn energies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// A pair of donor eigenstates used as the central-spin qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionPair<T> {
    pub plus_label: StateLabel,
    pub minus_label: StateLabel,
    pub p_plus: T,
    pub p_minus: T,
    /// `|P₊ − P₋|`: qubit–bath coupling scale.
    pub p_e: T,
    /// `|P₊| + |P₋|`: back-action factor entering the effective bath Hamiltonian.
    pub s: T,
    /// `E₊ − E₋ > 0`, rad/s.
    pub frequency: T,
}

impl<T: Real> TransitionPair<T> {
    /// Transition with given projections and no level information, for model studies.
    pub fn from_projections(p_plus: T, p_minus: T) -> Self {
        Self {
            plus_label: StateLabel::new(0, 0),
            minus_label: StateLabel::new(0, 0),
            p_plus,
            p_minus,
            p_e: (p_plus - p_minus).abs(),
            s: p_plus.abs() + p_minus.abs(),
            frequency: T::zero(),
        }
    }
}

/// Dense Hamiltonian over the product basis (`m_S` major, `m_I` minor, both descending).
pub fn build_hamiltonian<T: Real>(params: &DonorParams<T>, field: T) -> CMatrix<T> {
    let ds = spin::multiplicity(params.electron_twice);
    let di = spin::multiplicity(params.nuclear_twice);
    let one_s = CMatrix::<T>::identity(ds);
    let one_i = CMatrix::<T>::identity(di);
    let s_z = spin::sz::<T>(params.electron_twice);
    let s_p = spin::splus::<T>(params.electron_twice);
    let s_m = spin::sminus::<T>(params.electron_twice);
    let i_z = spin::sz::<T>(params.nuclear_twice);
    let i_p = spin::splus::<T>(params.nuclear_twice);
    let i_m = spin::sminus::<T>(params.nuclear_twice);

    let re = |x: T| Complex::new(x, T::zero());
    let half = T::lit(0.5);
    let zeeman_e = s_z.kron(&one_i).scale(re(params.gamma_e * field));
    let zeeman_n = one_s.kron(&i_z).scale(re(-params.gamma_n * field));
    let flip = s_p.kron(&i_m).add(&s_m.kron(&i_p)).scale(re(half));
    let contact = s_z.kron(&i_z).add(&flip).scale(re(params.hyperfine));
    zeeman_e.add(&zeeman_n).add(&contact)
}

/// Eigenvalues of the dense Hamiltonian, ascending.
pub fn dense_spectrum<T: Real>(params: &DonorParams<T>, field: T) -> Result<Vec<T>> {
    Ok(eigh(&build_hamiltonian(params, field))?.values)
}

struct Block<T> {
    /// Product-basis indices of the members, `m_S = +1/2` member first.
    members: Vec<(usize, T, T)>,
    h: [[T; 2]; 2],
}

fn block<T: Real>(params: &DonorParams<T>, field: T, m_f_twice: i32) -> Block<T> {
    let i2 = params.nuclear_twice as i32;
    let di = spin::multiplicity(params.nuclear_twice);
    let half = T::lit(0.5);
    let mut members = Vec::with_capacity(2);
    for ms2 in [1i32, -1] {
        let mi2 = m_f_twice - ms2;
        if mi2.abs() <= i2 {
            let i_s = ((1 - ms2) / 2) as usize;
            let i_i = ((i2 - mi2) / 2) as usize;
            members.push((
                i_s * di + i_i,
                T::lit(ms2 as f64 * 0.5),
                T::lit(mi2 as f64 * 0.5),
            ));
        }
    }
    let diag = |ms: T, mi: T| {
        params.gamma_e * field * ms - params.gamma_n * field * mi + params.hyperfine * ms * mi
    };
    let mut h = [[T::zero(); 2]; 2];
    h[0][0] = diag(members[0].1, members[0].2);
    if members.len() == 2 {
        h[1][1] = diag(members[1].1, members[1].2);
        let i = T::lit(i2 as f64 * 0.5);
        let mi = members[0].2;
        let off = half * params.hyperfine * (i * (i + T::one()) - mi * (mi + T::one())).sqrt();
        h[0][1] = off;
        h[1][0] = off;
    }
    Block { members, h }
}

/// All levels at `field`, labeled adiabatically from zero field.
///
/// Within each `m_F` block the upper state connects to `F = I + 1/2` and the
/// lower to `F = I − 1/2`; the 2x2 blocks never cross, so ordering fixes the label.
pub fn eigensystem<T: Real>(params: &DonorParams<T>, field: T) -> Result<LevelSet<T>> {
    params.validate()?;
    if field < T::zero() {
        return Err(Error::InvalidParameter("field must be >= 0".into()));
    }
    let dim = params.dim();
    let f_max = params.largest_f_twice();
    let mut levels = Vec::with_capacity(dim);
    let mut m = -f_max;
    while m <= f_max {
        let b = block(params, field, m);
        let mut push = |label: StateLabel, energy: T, amps: [T; 2]| {
            let mut state = vec![T::zero(); dim];
            let mut sz = T::zero();
            let mut iz = T::zero();
            for (k, &(idx, ms, mi)) in b.members.iter().enumerate() {
                state[idx] = amps[k];
                let w = amps[k] * amps[k];
                sz += w * ms;
                iz += w * mi;
            }
            levels.push(Level {
                label,
                energy,
                state,
                sz,
                iz,
            });
        };
        if b.members.len() == 1 {
            push(
                StateLabel {
                    f_twice: f_max,
                    m_f_twice: m,
                },
                b.h[0][0],
                [T::one(), T::zero()],
            );
        } else {
            let (a, c, d) = (b.h[0][0], b.h[0][1], b.h[1][1]);
            let mean = (a + d) * T::lit(0.5);
            let diff = (a - d) * T::lit(0.5);
            let half_gap = (diff * diff + c * c).sqrt();
            if half_gap <= params.hyperfine * T::epsilon() * T::lit(64.0) {
                return Err(Error::DegenerateLevels {
                    m_f: fmt_half(m),
                    gap: (half_gap + half_gap).as_f64(),
                });
            }
            let theta = T::lit(0.5) * (c + c).atan2(a - d);
            let (sn, cs) = theta.sin_cos();
            push(
                StateLabel {
                    f_twice: f_max,
                    m_f_twice: m,
                },
                mean + half_gap,
                [cs, sn],
            );
            push(
                StateLabel {
                    f_twice: f_max - 2,
                    m_f_twice: m,
                },
                mean - half_gap,
                [-sn, cs],
            );
        }
        m += 2;
    }
    Ok(LevelSet { field, levels })
}

/// `P±` and frequency for a labeled pair; labels are swapped if needed so that
/// the frequency is positive.
pub fn transition<T: Real>(
    params: &DonorParams<T>,
    field: T,
    plus: StateLabel,
    minus: StateLabel,
) -> Result<TransitionPair<T>> {
    let set = eigensystem(params, field)?;
    transition_in(&set, plus, minus)
}

pub fn transition_in<T: Real>(
    set: &LevelSet<T>,
    plus: StateLabel,
    minus: StateLabel,
) -> Result<TransitionPair<T>> {
    let (mut up, mut down) = (set.get(plus)?, set.get(minus)?);
    let (mut plus, mut minus) = (plus, minus);
    if up.energy < down.energy {
        std::mem::swap(&mut up, &mut down);
        std::mem::swap(&mut plus, &mut minus);
    }
    Ok(TransitionPair {
        plus_label: plus,
        minus_label: minus,
        p_plus: up.sz,
        p_minus: down.sz,
        p_e: (up.sz - down.sz).abs(),
        s: up.sz.abs() + down.sz.abs(),
        frequency: up.energy - down.energy,
    })
}

/// `d(E₊ − E₋)/dB` from Hellmann–Feynman: `γ_e ΔP − γ_n Δ⟨I^z⟩`.
pub fn frequency_slope<T: Real>(
    params: &DonorParams<T>,
    field: T,
    plus: StateLabel,
    minus: StateLabel,
) -> Result<T> {
    let set = eigensystem(params, field)?;
    let (a, b) = (set.get(plus)?, set.get(minus)?);
    Ok(params.gamma_e * (a.sz - b.sz) - params.gamma_n * (a.iz - b.iz))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClockTransition<T> {
    /// Field where `df/dB = 0`, tesla.
    pub field: T,
    /// Field where `P₊ = P₋`, when that crossing lies in the search range.
    pub projection_crossing: Option<T>,
    /// `projection_crossing − field`.
    pub separation: Option<T>,
}

fn bisect<T: Real>(
    mut lo: T,
    mut hi: T,
    quantity: &'static str,
    mut f: impl FnMut(T) -> Result<T>,
) -> Result<T> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            quantity,
            lo_mt: lo.as_f64() * 1e3,
            hi_mt: hi.as_f64() * 1e3,
        });
    }
    let rel = T::lit(1e-9).max(T::epsilon() * T::lit(4.0));
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if hi - lo <= rel * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Locates the clock transition of a pair inside `range` (tesla).
pub fn find_clock_transition<T: Real>(
    params: &DonorParams<T>,
    plus: StateLabel,
    minus: StateLabel,
    range: (T, T),
) -> Result<ClockTransition<T>> {
    let (lo, hi) = range;
    if !(lo >= T::zero() && hi > lo) {
        return Err(Error::InvalidParameter(
            "field range must satisfy 0 <= lo < hi".into(),
        ));
    }
    let field = bisect(lo, hi, "df/dB", |b| frequency_slope(params, b, plus, minus))?;
    let crossing = bisect(lo, hi, "P+ - P-", |b| {
        let set = eigensystem(params, b)?;
        Ok(set.get(plus)?.sz - set.get(minus)?.sz)
    })
    .ok();
    Ok(ClockTransition {
        field,
        projection_crossing: crossing,
        separation: crossing.map(|c| c - field),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi() -> DonorParams<f64> {
        DonorParams::bismuth()
    }

    #[test]
    fn zero_field_manifolds() {
        let p = bi();
        let set = eigensystem(&p, 0.0).unwrap();
        let mut upper = 0;
        let mut lower = 0;
        for l in &set.levels {
            if (l.energy - 2.25 * p.hyperfine).abs() < 1e-9 * p.hyperfine {
                upper += 1;
                assert_eq!(l.label.f_twice, 10);
            } else if (l.energy + 2.75 * p.hyperfine).abs() < 1e-9 * p.hyperfine {
                lower += 1;
                assert_eq!(l.label.f_twice, 8);
            }
        }
        assert_eq!((upper, lower), (11, 9));
        let split = set.get(StateLabel::new(5, 0)).unwrap().energy
            - set.get(StateLabel::new(4, 0)).unwrap().energy;
        assert!((split - 5.0 * p.hyperfine).abs() < 1e-6);
        assert!((split / std::f64::consts::TAU - 7.377e9).abs() < 1e6);
    }

    #[test]
    fn stretched_state_is_exact_at_every_field() {
        let p = bi();
        for b in [0.0, 0.0799, 0.47, 2.0] {
            let h = build_hamiltonian(&p, b);
            let mut v = vec![Complex::new(0.0, 0.0); 20];
            v[19] = Complex::new(1.0, 0.0); // m_S = -1/2, m_I = -9/2
            let hv = h.mul_vec(&v);
            let e = hv[19].re;
            for (k, z) in hv.iter().enumerate() {
                if k != 19 {
                    assert_eq!(z.norm(), 0.0);
                }
            }
            let set = eigensystem(&p, b).unwrap();
            let l = set.get(StateLabel::new(4, -5)).unwrap();
            assert_eq!(l.sz, -0.5);
            assert!((l.energy - e).abs() <= 1e-9 * e.abs().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_traceless() {
        let p = bi();
        let h = build_hamiltonian(&p, 0.0799);
        assert_eq!(h.hermiticity_residual(), 0.0);
        assert!(h.trace().norm() < 1e-6 * p.hyperfine);
    }

    #[test]
    fn block_solver_matches_dense() {
        let p = bi();
        for b in [0.0, 0.01, 0.0799, 0.3, 0.47] {
            let mut blocks = eigensystem(&p, b).unwrap().energies();
            blocks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let dense = dense_spectrum(&p, b).unwrap();
            for (x, y) in blocks.iter().zip(&dense) {
                assert!((x - y).abs() <= 1e-12 * p.hyperfine * 5.0, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn projections_sum_to_zero_and_states_orthonormal() {
        let p = bi();
        let set = eigensystem(&p, 0.1).unwrap();
        let total: f64 = set.levels.iter().map(|l| l.sz).sum();
        assert!(total.abs() < 1e-12);
        for a in &set.levels {
            for b in &set.levels {
                let dot: f64 = a.state.iter().zip(&b.state).map(|(x, y)| x * y).sum();
                let expect = if a.label == b.label { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn labels_near_ct() {
        let set = eigensystem(&bi(), 0.0799).unwrap();
        assert!(set.get(StateLabel::new(5, -1)).is_ok());
        assert!(set.get(StateLabel::new(4, -2)).is_ok());
        assert!(set.get(StateLabel::new(4, 6)).is_err());
    }

    #[test]
    fn transition_swaps_to_positive_frequency() {
        let p = bi();
        let t = transition(&p, 0.0799, StateLabel::new(4, -2), StateLabel::new(5, -1)).unwrap();
        assert_eq!(t.plus_label, StateLabel::new(5, -1));
        assert!(t.frequency > 0.0);
    }

    #[test]
    fn stretched_pair_has_no_clock_transition() {
        let err = find_clock_transition(
            &bi(),
            StateLabel::new(5, -4),
            StateLabel::new(4, -5),
            (0.05, 0.12),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn label_parsing() {
        assert_eq!("5,-1".parse::<StateLabel>().unwrap(), StateLabel::new(5, -1));
        assert_eq!(
            "|9/2,-7/2⟩".parse::<StateLabel>().unwrap(),
            StateLabel {
                f_twice: 9,
                m_f_twice: -7
            }
        );
        assert!("5".parse::<StateLabel>().is_err());
        assert_eq!(StateLabel::new(4, -2).to_string(), "4,-2");
    }

    #[test]
    fn single_precision_levels() {
        let p32 = DonorParams::<f32>::bismuth();
        let t = transition(&p32, 0.0799, StateLabel::new(5, -1), StateLabel::new(4, -2)).unwrap();
        assert!((t.p_plus - 0.0525).abs() < 0.003);
    }
}
