//! Gaussian decoherence in the time and frequency domains.

use num_complex::Complex;

use super::{Correlation, SpectralDensity};
use crate::curve::{CoherenceCurve, CurveMeta};
use crate::error::Result;
use crate::pulse::{PulseSequence, SequenceFamily};
use crate::quadrature::{Adaptive, GaussLegendre};
use crate::scalar::{cis, Real};

const GL_POINTS: usize = 10;
const MAX_DEPTH: usize = 48;

/// Autocorrelation of the modulation function on the unit interval,
/// `W(u) = ∫ f(x) f(x + u) dx`, piecewise linear in `u`.
struct Overlap<T> {
    bounds: Vec<T>,
}

impl<T: Real> Overlap<T> {
    fn new(seq: &PulseSequence<T>) -> Self {
        Self {
            bounds: seq.boundaries(),
        }
    }

    fn value(&self, u: T) -> T {
        let b = &self.bounds;
        let segs = b.len() - 1;
        let mut acc = T::zero();
        for j in 0..segs {
            for k in 0..segs {
                let lo = b[j].max(b[k] + u);
                let hi = b[j + 1].min(b[k + 1] + u);
                if hi > lo {
                    acc += PulseSequence::<T>::segment_sign(j) * PulseSequence::<T>::segment_sign(k) * (hi - lo);
                }
            }
        }
        acc
    }

    /// Kinks of `W` on `[0, 1]`.
    fn breakpoints(&self) -> Vec<T> {
        let mut pts: Vec<T> = Vec::new();
        for &a in &self.bounds {
            for &b in &self.bounds {
                let d = a - b;
                if d >= T::zero() {
                    pts.push(d);
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = T::epsilon() * T::lit(64.0);
        pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        pts
    }
}

/// `Φ(t) = ∫∫ C(t₁ − t₂) f(t₁) f(t₂) dt₁ dt₂` by integrating `C` against the
/// piecewise-linear overlap `W` between consecutive kinks.
pub fn dephasing_time<T: Real, C: Correlation<T> + ?Sized>(
    corr: &C,
    seq: &PulseSequence<T>,
    t: T,
) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    let overlap = Overlap::new(seq);
    let pts = overlap.breakpoints();
    let w: Vec<T> = pts.iter().map(|&u| overlap.value(u)).collect();
    let rule = GaussLegendre::new(GL_POINTS);
    let scale = corr.value(T::zero()).abs().max(corr.value(t).abs());
    let mut regular = T::zero();
    for k in 0..pts.len() - 1 {
        let (ua, ub) = (pts[k], pts[k + 1]);
        let (wa, wb) = (w[k], w[k + 1]);
        if wa == T::zero() && wb == T::zero() {
            continue;
        }
        let slope = (wb - wa) / (ub - ua);
        let ad = Adaptive {
            rule: &rule,
            abs_tol: T::lit(1e-15) * scale * (ub - ua),
            rel_tol: T::lit(1e-13),
            max_depth: MAX_DEPTH,
        };
        let mut f = |u: T| corr.value(t * u) * (wa + slope * (u - ua));
        regular += ad.integrate(ua, ub, &mut f)?;
    }
    Ok(T::lit(2.0) * t * t * regular + corr.white_weight() * t)
}

pub fn gaussian_coherence_time<T: Real, C: Correlation<T> + ?Sized>(
    corr: &C,
    seq: &PulseSequence<T>,
    p_e: T,
    t: T,
) -> Result<Complex<T>> {
    let phi = dephasing_time(corr, seq, t)?;
    Ok(Complex::new((-(p_e * p_e) * T::lit(0.5) * phi).exp(), T::zero()))
}

pub fn gaussian_curve_time<T: Real, C: Correlation<T> + ?Sized>(
    corr: &C,
    seq: &PulseSequence<T>,
    p_e: T,
    times: &[T],
    meta: CurveMeta,
) -> Result<CoherenceCurve<T>> {
    let values = times
        .iter()
        .map(|&t| gaussian_coherence_time(corr, seq, p_e, t))
        .collect::<Result<_>>()?;
    Ok(CoherenceCurve {
        times: times.to_vec(),
        values,
        meta,
    })
}

/// Controls the frequency-domain quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqQuadrature<T> {
    /// Number of filter periods integrated explicitly before the tail.
    pub periods: usize,
    pub rel_tol: T,
    /// Upper limit in `x = ωt` for sequences without a rational period.
    pub fallback_x_max: T,
}

impl<T: Real> Default for FreqQuadrature<T> {
    fn default() -> Self {
        Self {
            periods: 16,
            rel_tol: T::lit(1e-11),
            fallback_x_max: T::lit(2e5),
        }
    }
}

impl<T: Real> FreqQuadrature<T> {
    /// Cheaper settings, good to roughly 1e-4 in `ln L`.
    pub fn coarse() -> Self {
        Self {
            periods: 4,
            rel_tol: T::lit(1e-7),
            fallback_x_max: T::lit(2e4),
        }
    }
}

/// Fast `F(x)/x²`.
struct Kernel<'a, T> {
    seq: &'a PulseSequence<T>,
    /// pulse count when the CPMG closed form applies
    cpmg: Option<usize>,
    coeffs: Vec<(T, T)>,
    /// integer positions `q·τ_m` when a common denominator exists
    steps: Option<(usize, Vec<usize>)>,
}

const MAX_DENOMINATOR: usize = 4096;

impl<'a, T: Real> Kernel<'a, T> {
    fn new(seq: &'a PulseSequence<T>) -> Self {
        let coeffs = seq.filter_coefficients();
        let steps = seq.common_denominator(MAX_DENOMINATOR).map(|q| {
            let qf = T::from_usize_lossy(q);
            let pos = coeffs
                .iter()
                .map(|&(tau, _)| (tau * qf).round().to_usize().unwrap_or(0))
                .collect();
            (q, pos)
        });
        let cpmg = match seq.family() {
            SequenceFamily::Hahn => Some(1),
            SequenceFamily::Cpmg(n) => Some(n),
            _ => None,
        };
        Self { seq, cpmg, coeffs, steps }
    }

    fn period(&self) -> Option<T> {
        self.steps
            .as_ref()
            .map(|(q, _)| T::lit(2.0) * T::PI() * T::from_usize_lossy(*q))
    }

    fn eval(&self, x: T) -> T {
        if x < T::one() {
            return self.seq.filter_kernel(x);
        }
        if let Some(n) = self.cpmg {
            // F = 16 sin⁴(x/4N) {sin², cos²}(x/2) / cos²(x/2N) for N {even, odd}
            let nf = T::from_usize_lossy(n);
            let c = (x / (T::lit(2.0) * nf)).cos();
            if c.abs() > T::lit(1e-2) {
                let s4 = (x / (T::lit(4.0) * nf)).sin().powi(4);
                let h = x * T::lit(0.5);
                let e = if n % 2 == 0 { h.sin() } else { h.cos() };
                return T::lit(16.0) * s4 * e * e / (c * c * x * x);
            }
        }
        let f = match &self.steps {
            Some((q, pos)) => {
                let z = cis(x / T::from_usize_lossy(*q));
                let mut acc = Complex::new(T::zero(), T::zero());
                let mut power = Complex::new(T::one(), T::zero());
                let mut at = 0usize;
                for (&(_, c), &p) in self.coeffs.iter().zip(pos) {
                    while at < p {
                        power = power * z;
                        at += 1;
                    }
                    acc = acc + power * c;
                }
                acc.norm_sqr()
            }
            None => self.seq.filter_function(x),
        };
        f / (x * x)
    }

    /// `(Σ_{m<m'} 2c c' sin(kx)/k, Σ_{m<m'} 2c c' cos(kx)/k²)` with `k = τ_m' − τ_m`.
    fn oscillation(&self, x: T) -> (T, T) {
        let (mut s1, mut s2) = (T::zero(), T::zero());
        for (a, &(ta, ca)) in self.coeffs.iter().enumerate() {
            for &(tb, cb) in &self.coeffs[a + 1..] {
                let k = tb - ta;
                let w = T::lit(2.0) * ca * cb / k;
                s1 += w * (k * x).sin();
                s2 += w * (k * x).cos() / k;
            }
        }
        (s1, s2)
    }
}

/// `∫_a^b S(x/t) F(x)/x² dx` over panels of width `π/2`.
fn integrate_range<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    kernel: &Kernel<'_, T>,
    t: T,
    a: T,
    b: T,
    quad: &FreqQuadrature<T>,
    refine: bool,
) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let panel = T::FRAC_PI_2();
    let panels = ((b - a) / panel).ceil().to_usize().unwrap_or(1).max(1);
    let rule = GaussLegendre::new(GL_POINTS);
    let f = |x: T| spec.eval(x / t) * kernel.eval(x);
    let edges = |k: usize| {
        let lo = a + panel * T::from_usize_lossy(k);
        (lo, (lo + panel).min(b))
    };
    // a first pass sets the absolute scale, so negligible panels are not refined
    let rough: Vec<T> = (0..panels)
        .map(|k| {
            let (lo, hi) = edges(k);
            rule.integrate(lo, hi, f)
        })
        .collect();
    if !refine {
        return Ok(rough.iter().copied().sum());
    }
    let scale = rough.iter().map(|v| v.abs()).sum::<T>();
    let ad = Adaptive {
        rule: &rule,
        abs_tol: quad.rel_tol * scale / T::from_usize_lossy(panels) * T::lit(0.1),
        rel_tol: quad.rel_tol,
        max_depth: MAX_DEPTH,
    };
    let mut acc = T::zero();
    for (k, &whole) in rough.iter().enumerate() {
        let (lo, hi) = edges(k);
        acc += ad.refine_from(lo, hi, whole, &mut { f })?;
    }
    Ok(acc)
}

/// `∫_X^∞ S(x/t) F(x)/x² dx` with `F` replaced by its mean plus the two
/// leading boundary terms of its oscillating part.
fn tail_from<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    kernel: &Kernel<'_, T>,
    t: T,
    x: T,
) -> Result<T> {
    let mut tail = kernel.seq.filter_mean() * spec.tail_integral(x / t)? / t;
    // ∫_X^∞ g e^{ikx} dx ≈ e^{ikX} [−g(X)/(ik) − g'(X)/k²] with g = S(x/t)/x²
    let g = |y: T| spec.eval(y / t) / (y * y);
    let h = x * T::lit(1e-4);
    let dg = (g(x + h) - g(x - h)) / (h + h);
    let (s1, s2) = kernel.oscillation(x);
    tail -= g(x) * s1 + dg * s2;
    Ok(tail)
}

fn explicit_limit<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    kernel: &Kernel<'_, T>,
    t: T,
    quad: &FreqQuadrature<T>,
) -> T {
    match kernel.period() {
        Some(p) => {
            let mut periods = T::from_usize_lossy(quad.periods.max(1));
            if let Some(w) = spec.support_hint() {
                periods = periods.max((T::lit(2.0) * w * t / p).ceil());
            }
            p * periods
        }
        None => quad
            .fallback_x_max
            .max(spec.support_hint().map_or(T::zero(), |w| T::lit(2.0) * w * t)),
    }
}

/// `Φ(t) = (t/π) ∫₀^∞ S(x/t) F(x)/x² dx + C(∞) t² (∫f)²`.
///
/// The integral runs over panels of width `π/2` up to a whole number of
/// filter periods; beyond that `F` is replaced by its mean plus the leading
/// correction from its oscillating part.
pub fn dephasing_freq<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    seq: &PulseSequence<T>,
    t: T,
    quad: &FreqQuadrature<T>,
) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    let kernel = Kernel::new(seq);
    let x_max = explicit_limit(spec, &kernel, t, quad);
    let bulk = integrate_range(spec, &kernel, t, T::zero(), x_max, quad, true)?;
    let tail = tail_from(spec, &kernel, t, x_max)?;
    let mean = seq.mean_modulation();
    Ok(t / T::PI() * (bulk + tail) + spec.static_weight() * t * t * mean * mean)
}

/// Part of the dynamic dephasing contributed by frequencies outside `[lo, hi]`,
/// from a fixed-order rule without refinement.
pub fn dephasing_outside<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    seq: &PulseSequence<T>,
    t: T,
    lo: T,
    hi: T,
    quad: &FreqQuadrature<T>,
) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    let kernel = Kernel::new(seq);
    let below = integrate_range(spec, &kernel, t, T::zero(), lo * t, quad, false)?;
    let x_max = explicit_limit(spec, &kernel, t, quad);
    let x_hi = hi * t;
    let above = if x_hi >= x_max {
        tail_from(spec, &kernel, t, x_hi)?
    } else {
        integrate_range(spec, &kernel, t, x_hi, x_max, quad, false)? + tail_from(spec, &kernel, t, x_max)?
    };
    Ok(t / T::PI() * (below + above))
}

pub fn gaussian_coherence_freq_with<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    seq: &PulseSequence<T>,
    p_e: T,
    t: T,
    quad: &FreqQuadrature<T>,
) -> Result<T> {
    let phi = dephasing_freq(spec, seq, t, quad)?;
    Ok((-(p_e * p_e) * T::lit(0.5) * phi).exp())
}

pub fn gaussian_coherence_freq<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    seq: &PulseSequence<T>,
    p_e: T,
    t: T,
) -> Result<T> {
    gaussian_coherence_freq_with(spec, seq, p_e, t, &FreqQuadrature::default())
}

pub fn gaussian_curve_freq<T: Real, S: SpectralDensity<T> + ?Sized>(
    spec: &S,
    seq: &PulseSequence<T>,
    p_e: T,
    times: &[T],
    quad: &FreqQuadrature<T>,
    meta: CurveMeta,
) -> Result<CoherenceCurve<T>> {
    let values = times
        .iter()
        .map(|&t| gaussian_coherence_freq_with(spec, seq, p_e, t, quad))
        .collect::<Result<Vec<T>>>()?;
    Ok(CoherenceCurve::from_real(times.to_vec(), values, meta))
}
