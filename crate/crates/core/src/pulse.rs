//! Ideal π-pulse sequences, the modulation function `f(t)` and the filter
//! function `F(ωt)`.
//!
//! Pulse times are stored as fractions of the total evolution time. Segment
//! `k` (between boundaries `τ_k` and `τ_{k+1}`, with `τ_0 = 0`, `τ_{N+1} = 1`)
//! carries the sign `(−1)^k`.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cis, sinc, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceFamily {
    Ramsey,
    Hahn,
    Cpmg(usize),
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence<T> {
    fractions: Vec<T>,
    family: SequenceFamily,
}

impl<T: Real> PulseSequence<T> {
    /// Free evolution, no pulses.
    pub fn ramsey() -> Self {
        Self {
            fractions: Vec::new(),
            family: SequenceFamily::Ramsey,
        }
    }

    pub fn hahn() -> Self {
        Self {
            fractions: vec![T::lit(0.5)],
            family: SequenceFamily::Hahn,
        }
    }

    /// `τ_k = (2k − 1) / 2N`, `k = 1..N`.
    pub fn cpmg(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSequence(
                "CPMG needs at least one pulse; use ramsey".into(),
            ));
        }
        let denom = T::from_usize_lossy(2 * n);
        let fractions = (1..=n)
            .map(|k| T::from_usize_lossy(2 * k - 1) / denom)
            .collect();
        Ok(Self {
            fractions,
            family: SequenceFamily::Cpmg(n),
        })
    }

    pub fn custom(fractions: Vec<T>) -> Result<Self> {
        for (k, &f) in fractions.iter().enumerate() {
            if !(f > T::zero() && f < T::one()) {
                return Err(Error::InvalidSequence(format!(
                    "pulse fraction {f} at position {k} is outside (0, 1)"
                )));
            }
            if k > 0 && !(f > fractions[k - 1]) {
                return Err(Error::InvalidSequence(
                    "pulse fractions must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            fractions,
            family: SequenceFamily::Custom,
        })
    }

    /// Parses `ramsey`, `hahn`, `cpmg:N`, `custom:τ1,τ2,...`; `xy4`, `xy8` and
    /// `xy16` are aliases of CPMG with the same pulse count.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim().to_ascii_lowercase();
        let bad = || Error::InvalidSequence(format!("cannot parse {spec:?}"));
        match s.as_str() {
            "ramsey" | "fid" => return Ok(Self::ramsey()),
            "hahn" | "echo" => return Ok(Self::hahn()),
            "xy4" | "xy-4" => return Self::cpmg(4),
            "xy8" | "xy-8" => return Self::cpmg(8),
            "xy16" | "xy-16" => return Self::cpmg(16),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("cpmg:").or_else(|| s.strip_prefix("cpmg-")) {
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            return Self::cpmg(n);
        }
        if let Some(list) = s.strip_prefix("custom:") {
            let fr = list
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|_| bad())?;
            return Self::custom(fr);
        }
        Err(bad())
    }

    pub fn family(&self) -> SequenceFamily {
        self.family
    }

    pub fn pulse_count(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[T] {
        &self.fractions
    }

    /// `[0, τ_1, …, τ_N, 1]`
    pub fn boundaries(&self) -> Vec<T> {
        let mut b = Vec::with_capacity(self.fractions.len() + 2);
        b.push(T::zero());
        b.extend_from_slice(&self.fractions);
        b.push(T::one());
        b
    }

    #[inline]
    pub fn segment_sign(k: usize) -> T {
        if k % 2 == 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    /// `f(t)` for a sequence stretched over `t_total`.
    pub fn modulation(&self, t_total: T, t: T) -> Result<T> {
        if !(t >= T::zero() && t <= t_total) {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                t_total: t_total.as_f64(),
            });
        }
        let flips = self
            .fractions
            .iter()
            .filter(|&&f| f * t_total <= t)
            .count();
        Ok(Self::segment_sign(flips))
    }

    /// `∫₀¹ f(τ) dτ`
    pub fn mean_modulation(&self) -> T {
        self.boundaries()
            .windows(2)
            .enumerate()
            .map(|(k, w)| Self::segment_sign(k) * (w[1] - w[0]))
            .sum()
    }

    /// `F(x) = |Σ_k (−1)^k (e^{ixτ_{k+1}} − e^{ixτ_k})|²` with `x = ω t_total`.
    pub fn filter_function(&self, x: T) -> T {
        let b = self.boundaries();
        let mut acc = Complex::<T>::zero();
        for (k, w) in b.windows(2).enumerate() {
            let term = cis(x * w[1]) - cis(x * w[0]);
            acc += term * Self::segment_sign(k);
        }
        acc.norm_sqr()
    }

    /// `F(x)/x² = |∫₀¹ f(τ) e^{ixτ} dτ|²`, evaluated without cancellation at small `x`.
    pub fn filter_kernel(&self, x: T) -> T {
        let b = self.boundaries();
        let half = T::lit(0.5);
        let mut acc = Complex::<T>::zero();
        for (k, w) in b.windows(2).enumerate() {
            let len = w[1] - w[0];
            let mid = (w[1] + w[0]) * half;
            acc += cis(x * mid) * (Self::segment_sign(k) * len * sinc(x * len * half));
        }
        acc.norm_sqr()
    }

    /// Average of `F(x)` over `x`: `Σ_k |c_k|² = 2 + 4N`.
    pub fn filter_mean(&self) -> T {
        T::from_usize_lossy(2 + 4 * self.fractions.len())
    }

    /// Boundary coefficients `(τ_m, c_m)` with `F(x) = |Σ_m c_m e^{ixτ_m}|²`.
    pub fn filter_coefficients(&self) -> Vec<(T, T)> {
        let b = self.boundaries();
        let last = b.len() - 1;
        b.iter()
            .enumerate()
            .map(|(m, &tau)| {
                let before = if m == 0 { T::zero() } else { Self::segment_sign(m - 1) };
                let after = if m == last { T::zero() } else { Self::segment_sign(m) };
                (tau, before - after)
            })
            .collect()
    }

    /// Smallest `q ≤ max_q` with every `q·τ_k` an integer, so that `F(x)` has
    /// period `2πq`.
    pub fn common_denominator(&self, max_q: usize) -> Option<usize> {
        let tol = T::lit(1e-9);
        (1..=max_q).find(|&q| {
            let qf = T::from_usize_lossy(q);
            self.fractions
                .iter()
                .all(|&f| ((f * qf) - (f * qf).round()).abs() < tol)
        })
    }

    /// Short tag used in file names and tables (`hahn`, `cpmg:4`, ...).
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl<T: Real> fmt::Display for PulseSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            SequenceFamily::Ramsey => write!(f, "ramsey"),
            SequenceFamily::Hahn => write!(f, "hahn"),
            SequenceFamily::Cpmg(n) => write!(f, "cpmg:{n}"),
            SequenceFamily::Custom => {
                write!(f, "custom:")?;
                for (k, x) in self.fractions.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpmg_timings() {
        assert_eq!(PulseSequence::<f64>::cpmg(1).unwrap().fractions(), &[0.5]);
        assert_eq!(PulseSequence::<f64>::cpmg(2).unwrap().fractions(), &[0.25, 0.75]);
        let c = PulseSequence::<f64>::cpmg(128).unwrap();
        assert_eq!(c.pulse_count(), 128);
        assert_eq!(c.fractions()[0], 1.0 / 256.0);
        assert_eq!(c.fractions()[127], 255.0 / 256.0);
        assert!(PulseSequence::<f64>::cpmg(0).is_err());
    }

    #[test]
    fn modulation_values() {
        let hahn = PulseSequence::<f64>::hahn();
        assert_eq!(hahn.modulation(1.0, 0.75).unwrap(), -1.0);
        assert_eq!(hahn.modulation(1.0, 0.25).unwrap(), 1.0);
        assert!(hahn.modulation(1.0, 1.5).is_err());
        let fid = PulseSequence::<f64>::ramsey();
        assert_eq!(fid.modulation(2.0, 1.3).unwrap(), 1.0);
        for n in [1, 2, 5, 16] {
            assert!(PulseSequence::<f64>::cpmg(n).unwrap().mean_modulation().abs() < 1e-15);
        }
    }

    #[test]
    fn closed_forms_for_ramsey_and_hahn() {
        let fid = PulseSequence::<f64>::ramsey();
        let hahn = PulseSequence::<f64>::hahn();
        for &x in &[0.0, 0.3, 1.7, 12.0, 101.5] {
            let s2 = (x / 2.0f64).sin().powi(2);
            assert!((fid.filter_function(x) - 4.0 * s2).abs() < 1e-12);
            let s4 = (x / 4.0f64).sin().powi(4);
            assert!((hahn.filter_function(x) - 16.0 * s4).abs() < 1e-12);
        }
        assert_eq!(hahn.filter_function(0.0), 0.0);
    }

    #[test]
    fn kernel_matches_filter_over_x_squared() {
        let seq = PulseSequence::<f64>::cpmg(7).unwrap();
        for &x in &[0.5, 3.0, 22.0, 400.0] {
            let a = seq.filter_kernel(x);
            let b = seq.filter_function(x) / (x * x);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
        let fid = PulseSequence::<f64>::ramsey();
        assert!((fid.filter_kernel(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_reproduce_filter() {
        let seq = PulseSequence::<f64>::cpmg(5).unwrap();
        let c = seq.filter_coefficients();
        assert_eq!(c.len(), 7);
        assert_eq!(c[0].1, -1.0);
        assert_eq!(c[3].1.abs(), 2.0);
        let mean: f64 = c.iter().map(|(_, v)| v * v).sum();
        assert_eq!(mean, seq.filter_mean());
        for &x in &[0.3, 7.0, 55.5] {
            let z: num_complex::Complex<f64> = c.iter().map(|&(t, v)| cis(x * t) * v).sum();
            assert!((z.norm_sqr() - seq.filter_function(x)).abs() < 1e-10);
        }
        assert_eq!(seq.common_denominator(1000), Some(10));
        assert_eq!(PulseSequence::<f64>::hahn().common_denominator(10), Some(2));
        assert_eq!(PulseSequence::<f64>::ramsey().common_denominator(10), Some(1));
        let odd = PulseSequence::<f64>::custom(vec![1.0 / std::f64::consts::PI]).unwrap();
        assert_eq!(odd.common_denominator(1000), None);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["ramsey", "hahn", "cpmg:16", "custom:0.1,0.5,0.9"] {
            assert_eq!(PulseSequence::<f64>::parse(s).unwrap().label(), s);
        }
        assert_eq!(PulseSequence::<f64>::parse("xy8").unwrap().label(), "cpmg:8");
        assert!(PulseSequence::<f64>::parse("custom:0.5,0.2").is_err());
        assert!(PulseSequence::<f64>::parse("custom:1.0").is_err());
        assert!(PulseSequence::<f64>::parse("udd:3").is_err());
    }

    #[test]
    fn first_cpmg_peak_near_n_pi() {
        for n in [4usize, 16, 100] {
            let seq = PulseSequence::<f64>::cpmg(n).unwrap();
            // grid of a quarter of the natural resolution π in x = ωt
            let step = std::f64::consts::FRAC_PI_4;
            let fine = 1e-3;
            let mut best = (0.0, 0.0);
            let mut x = fine;
            while x < 2.0 * n as f64 * std::f64::consts::PI {
                let v = seq.filter_kernel(x);
                if v > best.1 {
                    best = (x, v);
                }
                x += fine;
            }
            let target = n as f64 * std::f64::consts::PI;
            assert!((best.0 - target).abs() <= step, "n={n}: peak at {}", best.0);
        }
    }
}
