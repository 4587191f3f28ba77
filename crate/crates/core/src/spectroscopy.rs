//! Dynamical-decoupling noise spectroscopy.
//!
//! A CPMG-N filter is treated as a delta at `ω₀ = πN/t` carrying its full
//! weight, so a coherence value maps to one spectral sample
//! `S(ω₀) = −2 ln L(t) / (t P_e²)`. Prediction runs the full filter over the
//! interpolated spectrum.

use crate::curve::{validate_grid, CoherenceCurve, CurveMeta};
use crate::error::{Error, Result};
use crate::noise::{dephasing_freq, dephasing_outside, Extrapolation, FreqQuadrature, NoiseSpectrum};
use crate::pulse::PulseSequence;
use crate::scalar::Real;

/// Coherence this close to one is read as no decay.
pub const UNITY_SLACK: f64 = 1e-9;
/// Prediction points whose filter weight inside the table falls below this are flagged.
pub const MIN_COVERAGE: f64 = 0.9;
/// Largest relative table spacing allowed at the first filter peak.
pub const MAX_RELATIVE_SPACING: f64 = 0.5;

/// Spectrum samples from `|L(t)|` under CPMG-`n`; `t = 0` is skipped.
pub fn extract_spectrum<T: Real>(
    times: &[T],
    coherence: &[T],
    n: usize,
    p_e: T,
    extrapolation: Extrapolation,
) -> Result<NoiseSpectrum<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("spectroscopy needs at least one pulse".into()));
    }
    if !(p_e > T::zero()) {
        return Err(Error::InvalidParameter("P_e must be positive for spectroscopy".into()));
    }
    if times.len() != coherence.len() || times.is_empty() {
        return Err(Error::InvalidParameter("times and coherence differ in length".into()));
    }
    validate_grid(times, false)?;
    let slack = T::lit(UNITY_SLACK);
    let nf = T::from_usize_lossy(n);
    let mut samples: Vec<(T, T)> = Vec::with_capacity(times.len());
    for (&t, &l) in times.iter().zip(coherence) {
        if !(l > T::zero()) || l > T::one() + slack || !l.is_finite() {
            return Err(Error::InvalidCoherence {
                value: l.as_f64(),
                time: t.as_f64(),
            });
        }
        if t == T::zero() {
            continue;
        }
        let s = if l >= T::one() - slack {
            T::zero()
        } else {
            -T::lit(2.0) * l.ln() / (t * p_e * p_e)
        };
        samples.push((T::PI() * nf / t, s));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no positive times to extract from".into()));
    }
    samples.reverse();
    let (omega, values) = samples.into_iter().unzip();
    NoiseSpectrum::from_samples(omega, values, T::zero(), extrapolation)
}

/// [`extract_spectrum`] from the magnitudes of a coherence curve.
pub fn extract_from_curve<T: Real>(
    curve: &CoherenceCurve<T>,
    n: usize,
    p_e: T,
    extrapolation: Extrapolation,
) -> Result<NoiseSpectrum<T>> {
    extract_spectrum(&curve.times, &curve.magnitudes(), n, p_e, extrapolation)
}

/// Rejects tables too coarse around the first filter peak of `seq` at time `t`.
pub fn check_resolution<T: Real>(spectrum: &NoiseSpectrum<T>, seq: &PulseSequence<T>, t: T) -> Result<()> {
    let n = seq.pulse_count();
    if n == 0 || t == T::zero() {
        return Ok(());
    }
    let peak = T::PI() * T::from_usize_lossy(n) / t;
    let (lo, hi) = (spectrum.omega[0], spectrum.omega[spectrum.omega.len() - 1]);
    if peak < lo || peak > hi {
        return Ok(());
    }
    let step = spectrum.spacing_at(peak);
    let needed = T::lit(MAX_RELATIVE_SPACING) * peak;
    if step > needed {
        return Err(Error::UnresolvedFilterPeak {
            step: step.as_f64(),
            needed: needed.as_f64(),
        });
    }
    Ok(())
}

/// Fraction of `∫ S F/ω²` that falls inside the sampled band.
pub fn coverage<T: Real>(spectrum: &NoiseSpectrum<T>, seq: &PulseSequence<T>, t: T, quad: &FreqQuadrature<T>) -> Result<T> {
    let total = dephasing_freq(spectrum, seq, t, quad)? - static_part(spectrum, seq, t);
    if !(total > T::zero()) {
        return Ok(T::one());
    }
    let (lo, hi) = (spectrum.omega[0], spectrum.omega[spectrum.omega.len() - 1]);
    let outside = dephasing_outside(spectrum, seq, t, lo, hi, quad)?;
    Ok((T::one() - outside / total).clamp(T::zero(), T::one()))
}

fn static_part<T: Real>(spectrum: &NoiseSpectrum<T>, seq: &PulseSequence<T>, t: T) -> T {
    let m = seq.mean_modulation();
    spectrum.static_weight * t * t * m * m
}

#[derive(Clone, Debug)]
pub struct Prediction<T> {
    pub curve: CoherenceCurve<T>,
    /// in-band filter weight per time point
    pub coverage: Vec<T>,
    /// set when any point has coverage below [`MIN_COVERAGE`]
    pub flagged: bool,
}

/// Gaussian coherence under `seq` from a tabulated spectrum.
pub fn predict_decoherence<T: Real>(
    spectrum: &NoiseSpectrum<T>,
    seq: &PulseSequence<T>,
    p_e: T,
    times: &[T],
    quad: &FreqQuadrature<T>,
) -> Result<Prediction<T>> {
    validate_grid(times, false)?;
    let mut values = Vec::with_capacity(times.len());
    let mut cov = Vec::with_capacity(times.len());
    for &t in times {
        check_resolution(spectrum, seq, t)?;
        let phi = dephasing_freq(spectrum, seq, t, quad)?;
        values.push((-(p_e * p_e) * T::lit(0.5) * phi).exp());
        cov.push(if t == T::zero() { T::one() } else { coverage(spectrum, seq, t, quad)? });
    }
    let flagged = cov.iter().any(|&c| c < T::lit(MIN_COVERAGE));
    let meta = CurveMeta {
        model: "spectroscopy".into(),
        transition: String::new(),
        sequence: seq.label(),
        seed: 0,
    };
    Ok(Prediction {
        curve: CoherenceCurve::from_real(times.to_vec(), values, meta),
        coverage: cov,
        flagged,
    })
}
