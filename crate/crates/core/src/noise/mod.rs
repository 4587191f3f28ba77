//! Semiclassical Gaussian noise model.
//!
//! Conventions: `C(t) = C(∞) + ∫ S(ω) e^{−iωt} dω/2π`, so that
//! `S(ω) = 2∫₀^∞ [C(t) − C(∞)] cos(ωt) dt`; the constant `C(∞)` is carried as
//! a delta at `ω = 0`. Under the Gaussian approximation
//! `ln L = −(P_e²/2) ∫∫ C(t₁ − t₂) f(t₁) f(t₂) dt₁ dt₂`.

mod fit;
mod gaussian;
mod lines;
mod models;
mod pair;
mod spectrum;

pub use fit::{fit_stretched_exponential, FitOptions, StretchedExpFit};
pub use gaussian::{
    dephasing_freq, dephasing_outside, dephasing_time, gaussian_coherence_freq, gaussian_coherence_freq_with,
    gaussian_coherence_time, gaussian_curve_freq, gaussian_curve_time, FreqQuadrature,
};
pub use lines::{Line, LineSpectrum};
pub use models::{GaussianNoise, Lorentzian, NarrowBand, SampledCorrelation, StretchedExp, WhiteNoise};
pub use pair::{pair_flipflop_correlation, AmplitudeMode, PairModel, PairTerm};
pub use spectrum::{spectrum, spectrum_on, Extrapolation, NoiseSpectrum};

use crate::error::Result;
use crate::quadrature::{Adaptive, GaussLegendre};
use crate::scalar::Real;

/// Stationary, even correlation function.
pub trait Correlation<T: Real>: Sync {
    /// Regular part of `C(t)` for `t ≥ 0`.
    fn value(&self, t: T) -> T;

    /// `S₀` of a white component `S₀ δ(t)`.
    fn white_weight(&self) -> T {
        T::zero()
    }
}

/// One-sided description of an even noise spectrum.
pub trait SpectralDensity<T: Real>: Sync {
    /// `S(ω)` of the fluctuating part, `ω ≥ 0`.
    fn eval(&self, omega: T) -> T;

    /// `C(∞)`, the weight of the delta at zero frequency.
    fn static_weight(&self) -> T {
        T::zero()
    }

    /// Frequency above which `S` is smooth and decaying, if known.
    fn support_hint(&self) -> Option<T> {
        None
    }

    /// `∫_Ω^∞ S(ω)/ω² dω`.
    fn tail_integral(&self, omega: T) -> Result<T> {
        // Gauss nodes never touch u = 0; ω = Ω/u maps [Ω, ∞) onto (0, 1]
        let rule = GaussLegendre::new(12);
        let ad = Adaptive {
            rule: &rule,
            abs_tol: T::zero(),
            rel_tol: T::lit(1e-12),
            max_depth: 40,
        };
        let mut f = |u: T| self.eval(omega / u);
        Ok(ad.integrate(T::zero(), T::one(), &mut f)? / omega)
    }
}

impl<T: Real> Correlation<T> for LineSpectrum<T> {
    fn value(&self, t: T) -> T {
        LineSpectrum::value(self, t)
    }
}
