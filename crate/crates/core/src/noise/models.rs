//! Closed-form correlation functions and spectra.

use super::{Correlation, SpectralDensity, StretchedExpFit};
use crate::curve::CorrelationCurve;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `C(t) = C∞ + Δ² exp[−(|t|/τ)ⁿ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StretchedExp<T> {
    pub c_inf: T,
    pub delta2: T,
    pub tau: T,
    pub n: T,
}

impl<T: Real> StretchedExp<T> {
    pub fn from_fit(fit: &StretchedExpFit<T>) -> Self {
        Self {
            c_inf: fit.c_inf(),
            delta2: fit.delta * fit.delta,
            tau: fit.tau,
            n: fit.n_stretch,
        }
    }

    pub fn c0(&self) -> T {
        self.c_inf + self.delta2
    }
}

impl<T: Real> Correlation<T> for StretchedExp<T> {
    fn value(&self, t: T) -> T {
        self.c_inf + self.delta2 * (-(t.abs() / self.tau).powf(self.n)).exp()
    }
}

/// `C(t) = S₀ δ(t)`, flat spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhiteNoise<T> {
    pub s0: T,
}

impl<T: Real> Correlation<T> for WhiteNoise<T> {
    fn value(&self, _t: T) -> T {
        T::zero()
    }

    fn white_weight(&self) -> T {
        self.s0
    }
}

impl<T: Real> SpectralDensity<T> for WhiteNoise<T> {
    fn eval(&self, _omega: T) -> T {
        self.s0
    }

    fn tail_integral(&self, omega: T) -> Result<T> {
        Ok(self.s0 / omega)
    }
}

/// Ornstein–Uhlenbeck noise: `C = C∞ + Δ² e^{−|t|/τ}`, `S = 2Δ²τ/(1 + ω²τ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorentzian<T> {
    pub delta2: T,
    pub tau: T,
    pub c_inf: T,
}

impl<T: Real> Correlation<T> for Lorentzian<T> {
    fn value(&self, t: T) -> T {
        self.c_inf + self.delta2 * (-t.abs() / self.tau).exp()
    }
}

impl<T: Real> SpectralDensity<T> for Lorentzian<T> {
    fn eval(&self, omega: T) -> T {
        let x = omega * self.tau;
        T::lit(2.0) * self.delta2 * self.tau / (T::one() + x * x)
    }

    fn static_weight(&self) -> T {
        self.c_inf
    }

    fn support_hint(&self) -> Option<T> {
        Some(T::lit(10.0) / self.tau)
    }

    fn tail_integral(&self, omega: T) -> Result<T> {
        // ∫ 2Δ²τ / (ω²(1 + ω²τ²)) = 2Δ²τ [1/Ω − τ (π/2 − atan Ωτ)]
        let x = omega * self.tau;
        let rest = if x > T::lit(1e3) {
            // 1/Ω − τ·atan(1/x) loses all digits; use the series
            let inv = T::one() / x;
            self.tau * inv.powi(3) * (T::one() / T::lit(3.0) - inv * inv / T::lit(5.0))
        } else {
            T::one() / omega - self.tau * (T::FRAC_PI_2() - x.atan())
        };
        Ok(T::lit(2.0) * self.delta2 * self.tau * rest)
    }
}

/// `C = C∞ + Δ² e^{−(t/τ)²}`, `S = √π Δ²τ e^{−ω²τ²/4}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianNoise<T> {
    pub delta2: T,
    pub tau: T,
    pub c_inf: T,
}

impl<T: Real> Correlation<T> for GaussianNoise<T> {
    fn value(&self, t: T) -> T {
        let x = t / self.tau;
        self.c_inf + self.delta2 * (-x * x).exp()
    }
}

impl<T: Real> SpectralDensity<T> for GaussianNoise<T> {
    fn eval(&self, omega: T) -> T {
        let x = omega * self.tau;
        T::PI().sqrt() * self.delta2 * self.tau * (-x * x / T::lit(4.0)).exp()
    }

    fn static_weight(&self) -> T {
        self.c_inf
    }

    fn support_hint(&self) -> Option<T> {
        Some(T::lit(12.0) / self.tau)
    }
}

/// Band-limited noise around `ω₀`: `C = Δ² cos(ω₀t) e^{−σ²t²/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NarrowBand<T> {
    pub delta2: T,
    pub omega0: T,
    pub sigma: T,
}

impl<T: Real> Correlation<T> for NarrowBand<T> {
    fn value(&self, t: T) -> T {
        let s = self.sigma * t;
        self.delta2 * (self.omega0 * t).cos() * (-s * s / T::lit(2.0)).exp()
    }
}

impl<T: Real> SpectralDensity<T> for NarrowBand<T> {
    fn eval(&self, omega: T) -> T {
        let g = |d: T| {
            let x = d / self.sigma;
            (-x * x / T::lit(2.0)).exp()
        };
        let norm = (T::lit(2.0) * T::PI()).sqrt() / self.sigma * T::lit(0.5);
        self.delta2 * norm * (g(omega - self.omega0) + g(omega + self.omega0))
    }

    fn support_hint(&self) -> Option<T> {
        Some(self.omega0 + T::lit(12.0) * self.sigma)
    }
}

/// A sampled `C(t)` interpolated linearly, continued past the last sample by a fit.
#[derive(Clone, Debug)]
pub struct SampledCorrelation<T> {
    curve: CorrelationCurve<T>,
    tail: StretchedExp<T>,
}

impl<T: Real> SampledCorrelation<T> {
    pub fn new(curve: CorrelationCurve<T>, fit: &StretchedExpFit<T>) -> Result<Self> {
        if curve.times.len() < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        Ok(Self {
            curve,
            tail: StretchedExp::from_fit(fit),
        })
    }
}

impl<T: Real> Correlation<T> for SampledCorrelation<T> {
    fn value(&self, t: T) -> T {
        let t = t.abs();
        let ts = &self.curve.times;
        let last = ts.len() - 1;
        if t >= ts[last] {
            return self.tail.value(t);
        }
        let k = ts.partition_point(|&x| x <= t).max(1) - 1;
        let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        self.curve.values[k] * (T::one() - w) + self.curve.values[k + 1] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_tail_matches_generic() {
        let l = Lorentzian {
            delta2: 2.0,
            tau: 1e-3,
            c_inf: 0.0,
        };
        struct Generic(Lorentzian<f64>);
        impl SpectralDensity<f64> for Generic {
            fn eval(&self, w: f64) -> f64 {
                self.0.eval(w)
            }
        }
        for om in [10.0, 1e3, 1e5, 1e7] {
            let a = l.tail_integral(om).unwrap();
            let b = Generic(l).tail_integral(om).unwrap();
            assert!((a - b).abs() < 1e-9 * a, "{om}: {a} {b}");
        }
    }

    #[test]
    fn narrow_band_integrates_to_delta2() {
        // ∫S dω/2π over the whole line = C(0)
        let nb = NarrowBand {
            delta2: 3.0,
            omega0: 50.0,
            sigma: 4.0,
        };
        let n = 200_000;
        let h = 200.0 / n as f64;
        let s: f64 = (0..=n).map(|k| nb.eval(k as f64 * h) * if k == 0 || k == n { 0.5 } else { 1.0 }).sum::<f64>() * h;
        assert!((s / std::f64::consts::PI - 3.0).abs() < 1e-9);
    }
}
