//! Correlation functions that are finite sums of cosines.

use crate::pulse::PulseSequence;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line<T> {
    /// rad/s, non-negative
    pub omega: T,
    /// rad²/s²
    pub weight: T,
}

/// `C(t) = static_weight + Σ_k w_k cos(ω_k t)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineSpectrum<T> {
    pub lines: Vec<Line<T>>,
    pub static_weight: T,
}

impl<T: Real> LineSpectrum<T> {
    pub fn new() -> Self {
        Self {
            lines: Vec::new(),
            static_weight: T::zero(),
        }
    }

    pub fn push(&mut self, omega: T, weight: T) {
        self.lines.push(Line {
            omega: omega.abs(),
            weight,
        });
    }

    /// Adds `sign · other`.
    pub fn accumulate(&mut self, other: &Self, sign: T) {
        self.static_weight += sign * other.static_weight;
        self.lines.extend(other.lines.iter().map(|l| Line {
            omega: l.omega,
            weight: sign * l.weight,
        }));
    }

    pub fn value(&self, t: T) -> T {
        self.static_weight + self.lines.iter().map(|l| l.weight * (l.omega * t).cos()).sum::<T>()
    }

    /// `C(0)`
    pub fn total_weight(&self) -> T {
        self.static_weight + self.lines.iter().map(|l| l.weight).sum::<T>()
    }

    /// `∫∫ C(t₁ − t₂) f(t₁) f(t₂) dt₁ dt₂` over `[0, t]`, in closed form.
    pub fn dephasing_integral(&self, seq: &PulseSequence<T>, t: T) -> T {
        let mean = seq.mean_modulation();
        let t2 = t * t;
        let dynamic: T = self
            .lines
            .iter()
            .map(|l| l.weight * seq.filter_kernel(l.omega * t))
            .sum();
        t2 * (dynamic + self.static_weight * mean * mean)
    }

    /// Spectrum seen through a lag window `1 − |τ|/t`:
    /// `Σ_k w_k [g(ω_k − ω) + g(ω_k + ω)]` with `g(δ) = 2 sin²(δt/2)/(δ²t)`.
    /// The static weight is left out.
    pub fn windowed_spectrum(&self, omega: T, t: T) -> T {
        let half = T::lit(0.5);
        let g = |d: T| {
            let x = d * t * half;
            if x.abs() < T::lit(1e-4) {
                t * half * (T::one() - x * x / T::lit(3.0))
            } else {
                let s = x.sin();
                T::lit(2.0) * s * s / (d * d * t)
            }
        };
        self.lines
            .iter()
            .map(|l| l.weight * (g(l.omega - omega) + g(l.omega + omega)))
            .sum()
    }

    /// Gaussian coherence `exp(−P_e²/2 · ∫∫ C f f)`.
    pub fn gaussian_coherence(&self, seq: &PulseSequence<T>, p_e: T, t: T) -> T {
        (-(p_e * p_e) * T::lit(0.5) * self.dephasing_integral(seq, t)).exp()
    }
}
