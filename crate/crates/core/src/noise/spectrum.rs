//! Noise spectrum from a sampled correlation function.

use serde::{Deserialize, Serialize};

use super::{SpectralDensity, StretchedExpFit};
use crate::curve::CorrelationCurve;
use crate::error::{Error, Result};
use crate::quadrature::{Adaptive, GaussLegendre};
use crate::scalar::{sinc, Real};

/// Continuation of a tabulated spectrum above its last sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Power law through the last two samples, exponent clamped to `≤ 0`.
    #[default]
    PowerLaw,
    Zero,
}

/// Tabulated `S(ω)`, log-log interpolated between samples and held constant
/// below the first one.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpectrum<T> {
    /// rad/s, strictly increasing
    pub omega: Vec<T>,
    /// rad²/s
    pub values: Vec<T>,
    pub static_weight: T,
    pub extrapolation: Extrapolation,
    /// set when some sample is significantly negative
    pub negative: bool,
}

impl<T: Real> NoiseSpectrum<T> {
    pub fn from_samples(omega: Vec<T>, values: Vec<T>, static_weight: T, extrapolation: Extrapolation) -> Result<Self> {
        if omega.is_empty() || omega.len() != values.len() {
            return Err(Error::InvalidParameter("spectrum needs matching, non-empty columns".into()));
        }
        if omega[0] < T::zero() || omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("spectrum frequencies must be non-negative and increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("spectrum contains non-finite values".into()));
        }
        let peak = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let negative = values.iter().any(|&v| v < -T::lit(1e-6) * peak);
        Ok(Self {
            omega,
            values,
            static_weight,
            extrapolation,
            negative,
        })
    }

    fn exponent(&self) -> Option<T> {
        let n = self.omega.len();
        if self.extrapolation == Extrapolation::Zero || n < 2 {
            return None;
        }
        let (w0, w1) = (self.omega[n - 2], self.omega[n - 1]);
        let (s0, s1) = (self.values[n - 2], self.values[n - 1]);
        if s0 > T::zero() && s1 > T::zero() && w0 > T::zero() {
            Some(((s1 / s0).ln() / (w1 / w0).ln()).min(T::zero()))
        } else {
            None
        }
    }

    fn last(&self) -> (T, T) {
        let n = self.omega.len() - 1;
        (self.omega[n], self.values[n])
    }

    /// Local spacing of the table at `omega`.
    pub fn spacing_at(&self, omega: T) -> T {
        let w = &self.omega;
        if w.len() < 2 {
            return T::infinity();
        }
        let k = w.partition_point(|&x| x <= omega).clamp(1, w.len() - 1);
        w[k] - w[k - 1]
    }
}

impl<T: Real> SpectralDensity<T> for NoiseSpectrum<T> {
    fn eval(&self, omega: T) -> T {
        let w = &self.omega;
        let v = &self.values;
        let omega = omega.abs();
        if omega <= w[0] {
            return v[0];
        }
        let (wl, sl) = self.last();
        if omega >= wl {
            if omega == wl {
                return sl;
            }
            return match self.exponent() {
                Some(a) => sl * (omega / wl).powf(a),
                None if self.extrapolation == Extrapolation::PowerLaw && sl != T::zero() => sl,
                None => T::zero(),
            };
        }
        let k = w.partition_point(|&x| x <= omega);
        let (w0, w1, s0, s1) = (w[k - 1], w[k], v[k - 1], v[k]);
        if w0 > T::zero() && s0 > T::zero() && s1 > T::zero() {
            let f = (omega / w0).ln() / (w1 / w0).ln();
            s0 * (s1 / s0).powf(f)
        } else {
            s0 + (s1 - s0) * (omega - w0) / (w1 - w0)
        }
    }

    fn static_weight(&self) -> T {
        self.static_weight
    }

    fn tail_integral(&self, omega: T) -> Result<T> {
        let (wl, sl) = self.last();
        let beyond = |from: T| match self.exponent() {
            Some(a) => sl * wl.powf(-a) * from.powf(a - T::one()) / (T::one() - a),
            None if self.extrapolation == Extrapolation::PowerLaw => sl / from,
            None => T::zero(),
        };
        if omega >= wl {
            return Ok(beyond(omega));
        }
        let rule = GaussLegendre::new(10);
        let mut acc = beyond(wl);
        let mut nodes: Vec<T> = vec![omega];
        nodes.extend(self.omega.iter().copied().filter(|&x| x > omega));
        for p in nodes.windows(2) {
            let ad = Adaptive {
                rule: &rule,
                abs_tol: T::zero(),
                rel_tol: T::lit(1e-12),
                max_depth: 40,
            };
            let mut f = |x: T| self.eval(x) / (x * x);
            acc += ad.integrate(p[0], p[1], &mut f)?;
        }
        Ok(acc)
    }
}

/// `0` plus `n − 1` log-spaced frequencies from `1/(10 t_max)` to `π/Δt`.
pub fn default_omega_grid<T: Real>(curve: &CorrelationCurve<T>, n: usize) -> Vec<T> {
    let t = &curve.times;
    let t_max = t[t.len() - 1];
    let dt = t[1] - t[0];
    let lo = (T::one() / (T::lit(10.0) * t_max)).ln();
    let hi = (T::PI() / dt).ln();
    let m = n.max(3) - 1;
    std::iter::once(T::zero())
        .chain((0..m).map(|k| (lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(m - 1)).exp()))
        .collect()
}

/// `∫_a^b [f_a + m(t − a)] cos(ωt) dt` without cancellation at small `ωh`.
fn filon_segment<T: Real>(a: T, b: T, fa: T, fb: T, omega: T) -> T {
    let half = (b - a) * T::lit(0.5);
    let c = a + half;
    let mean = (fa + fb) * T::lit(0.5);
    let slope = (fb - fa) / (b - a);
    let x = omega * half;
    // ∫_{-h}^{h} u sin(ωu) du = 2h² (sin x − x cos x)/x²
    let j = if x.abs() < T::lit(1e-3) {
        let x2 = x * x;
        x / T::lit(3.0) - x * x2 / T::lit(30.0)
    } else {
        (x.sin() - x * x.cos()) / (x * x)
    };
    mean * T::lit(2.0) * half * (omega * c).cos() * sinc(x) - slope * (omega * c).sin() * T::lit(2.0) * half * half * j
}

/// `2∫_{t_max}^∞ Δ² exp[−(t/τ)ⁿ] cos(ωt) dt`
fn fit_tail<T: Real>(fit: &StretchedExpFit<T>, t_max: T, omega: T, rule: &GaussLegendre<T>) -> Result<T> {
    let d2 = fit.delta * fit.delta;
    if d2 == T::zero() {
        return Ok(T::zero());
    }
    // exp(−(t/τ)ⁿ) < e^{−40} beyond this
    let end = fit.tau * T::lit(40.0).powf(T::one() / fit.n_stretch);
    if end <= t_max {
        return Ok(T::zero());
    }
    let mut width = (end - t_max) / T::lit(64.0);
    if omega > T::zero() {
        width = width.min(T::PI() / omega);
    }
    let panels = ((end - t_max) / width).ceil().to_usize().unwrap_or(1).clamp(1, 1 << 22);
    let width = (end - t_max) / T::from_usize_lossy(panels);
    let mut acc = T::zero();
    for k in 0..panels {
        let a = t_max + width * T::from_usize_lossy(k);
        let ad = Adaptive {
            rule,
            abs_tol: d2 * width * T::lit(1e-14),
            rel_tol: T::lit(1e-10),
            max_depth: 30,
        };
        let mut f = |t: T| d2 * (-(t / fit.tau).powf(fit.n_stretch)).exp() * (omega * t).cos();
        acc += ad.integrate(a, a + width, &mut f)?;
    }
    Ok(T::lit(2.0) * acc)
}

/// `S(ω) = 2∫₀^∞ [C(t) − C∞] cos(ωt) dt` on a chosen grid. The data are
/// integrated exactly as a piecewise-linear function; past the last sample the
/// fit takes over. `C∞` is taken from the fit.
pub fn spectrum_on<T: Real>(curve: &CorrelationCurve<T>, fit: &StretchedExpFit<T>, omega: &[T]) -> Result<NoiseSpectrum<T>> {
    let t = &curve.times;
    if t.len() < 2 {
        return Err(Error::InvalidParameter("need at least two correlation samples".into()));
    }
    let c_inf = fit.c_inf();
    let y: Vec<T> = curve.values.iter().map(|&v| v - c_inf).collect();
    let t_max = t[t.len() - 1];
    let rule = GaussLegendre::new(10);
    let values = omega
        .iter()
        .map(|&w| {
            let data: T = (0..t.len() - 1).map(|k| filon_segment(t[k], t[k + 1], y[k], y[k + 1], w)).sum();
            Ok(T::lit(2.0) * data + fit_tail(fit, t_max, w, &rule)?)
        })
        .collect::<Result<Vec<T>>>()?;
    NoiseSpectrum::from_samples(omega.to_vec(), values, c_inf.max(T::zero()), Extrapolation::PowerLaw)
}

/// [`spectrum_on`] over [`default_omega_grid`] with `n` points.
pub fn spectrum<T: Real>(curve: &CorrelationCurve<T>, fit: &StretchedExpFit<T>, n: usize) -> Result<NoiseSpectrum<T>> {
    spectrum_on(curve, fit, &default_omega_grid(curve, n))
}
