//! Stretched-exponential fit of a sampled correlation function.

use serde::Serialize;

use crate::curve::CorrelationCurve;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions<T> {
    pub n_min: T,
    pub n_max: T,
    pub max_iter: usize,
    /// simplex size in (ln τ, n) at which the search stops
    pub x_tol: T,
    /// starting values of the stretch exponent
    pub starts: Vec<T>,
    /// `Δ²/C(0)` below which the decay is not identifiable
    pub min_relative_amplitude: T,
    /// longer curves are thinned to about this many samples
    pub max_points: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            n_min: T::lit(0.3),
            n_max: T::lit(6.0),
            max_iter: 4000,
            x_tol: T::lit(1e-11),
            starts: vec![T::lit(0.5), T::one(), T::lit(2.0)],
            min_relative_amplitude: T::lit(1e-6),
            max_points: 2000,
        }
    }
}

/// `C(t) ≈ C(0) − Δ² [1 − exp(−(t/τ)ⁿ)]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StretchedExpFit<T> {
    /// rad/s
    pub delta: T,
    pub tau: T,
    pub n_stretch: T,
    pub c0: T,
    pub residual_rms: T,
    pub converged: bool,
    /// false when the curve barely decays and `τ`, `n` are arbitrary
    pub identifiable: bool,
    /// true when the sampled window reaches `t > τ`
    pub covers_decay: bool,
}

impl<T: Real> StretchedExpFit<T> {
    pub fn c_inf(&self) -> T {
        self.c0 - self.delta * self.delta
    }

    pub fn value(&self, t: T) -> T {
        self.c_inf() + self.delta * self.delta * (-(t.abs() / self.tau).powf(self.n_stretch)).exp()
    }
}

struct Problem<'a, T> {
    times: &'a [T],
    gap: Vec<T>,
    c0: T,
    n_min: T,
    n_max: T,
}

impl<T: Real> Problem<'_, T> {
    /// Best `Δ²` for fixed `(τ, n)` and the residual sum of squares.
    fn project(&self, ln_tau: T, n: T) -> (T, T) {
        let tau = ln_tau.exp();
        let g: Vec<T> = self
            .times
            .iter()
            .map(|&t| T::one() - (-(t / tau).powf(n)).exp())
            .collect();
        let gg: T = g.iter().map(|&x| x * x).sum();
        let gy: T = g.iter().zip(&self.gap).map(|(&a, &b)| a * b).sum();
        let upper = self.c0.abs().max(self.gap.iter().fold(T::zero(), |m, &x| m.max(x)));
        let d2 = if gg > T::zero() {
            (gy / gg).max(T::zero()).min(upper)
        } else {
            T::zero()
        };
        let ssr = g
            .iter()
            .zip(&self.gap)
            .map(|(&a, &b)| {
                let r = b - d2 * a;
                r * r
            })
            .sum();
        (d2, ssr)
    }

    fn cost(&self, x: [T; 2]) -> T {
        let n = x[1];
        let excess = (self.n_min - n).max(T::zero()) + (n - self.n_max).max(T::zero());
        let n = n.max(self.n_min).min(self.n_max);
        let (_, ssr) = self.project(x[0], n);
        ssr * (T::one() + excess * T::lit(1e3)) + excess
    }
}

/// Nelder–Mead on two parameters; returns the best vertex and whether the
/// simplex shrank below `x_tol`.
fn nelder_mead<T: Real>(f: impl Fn([T; 2]) -> T, start: [T; 2], step: [T; 2], x_tol: T, max_iter: usize) -> ([T; 2], T, bool) {
    let mut pts = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut val = pts.map(&f);
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| val[a].partial_cmp(&val[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = order.map(|k| pts[k]);
        val = order.map(|k| val[k]);
        let size = (1..3)
            .map(|k| (pts[k][0] - pts[0][0]).abs().max((pts[k][1] - pts[0][1]).abs()))
            .fold(T::zero(), T::max);
        if size < x_tol {
            return (pts[0], val[0], true);
        }
        let c = [(pts[0][0] + pts[1][0]) * half, (pts[0][1] + pts[1][1]) * half];
        let along = |a: T| [c[0] + a * (pts[2][0] - c[0]), c[1] + a * (pts[2][1] - c[1])];
        let r = along(-T::one());
        let fr = f(r);
        if fr < val[0] {
            let e = along(-T::lit(2.0));
            let fe = f(e);
            if fe < fr {
                pts[2] = e;
                val[2] = fe;
            } else {
                pts[2] = r;
                val[2] = fr;
            }
        } else if fr < val[1] {
            pts[2] = r;
            val[2] = fr;
        } else {
            let (k, fk) = if fr < val[2] {
                let k = along(-half);
                (k, f(k))
            } else {
                let k = along(half);
                (k, f(k))
            };
            if fk < val[2].min(fr) {
                pts[2] = k;
                val[2] = fk;
            } else {
                for i in 1..3 {
                    pts[i] = [
                        pts[0][0] + (pts[i][0] - pts[0][0]) * half,
                        pts[0][1] + (pts[i][1] - pts[0][1]) * half,
                    ];
                    val[i] = f(pts[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| val[a].partial_cmp(&val[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    (pts[best], val[best], false)
}

/// Fits `C(t) = C∞ + Δ² exp[−(t/τ)ⁿ]` with `C(0)` pinned to the first sample.
///
/// `Δ²` is eliminated in closed form; `(ln τ, n)` are searched by Nelder–Mead
/// from several starting exponents.
pub fn fit_stretched_exponential<T: Real>(
    curve: &CorrelationCurve<T>,
    options: &FitOptions<T>,
) -> Result<StretchedExpFit<T>> {
    if curve.times.len() < 4 {
        return Err(Error::InvalidParameter("need at least four samples to fit".into()));
    }
    if options.starts.is_empty() || !(options.n_min > T::zero() && options.n_max > options.n_min) {
        return Err(Error::InvalidParameter("bad fit options".into()));
    }
    let c0 = curve.c0;
    let stride = curve.times.len().div_ceil(options.max_points.max(4));
    let last = curve.times.len() - 1;
    let keep: Vec<usize> = (0..=last).step_by(stride).chain((last % stride != 0).then_some(last)).collect();
    let times: &Vec<T> = &keep.iter().map(|&k| curve.times[k]).collect();
    let gap: Vec<T> = keep.iter().map(|&k| c0 - curve.values[k]).collect();
    let problem = Problem {
        times,
        gap,
        c0,
        n_min: options.n_min,
        n_max: options.n_max,
    };
    let t_max = times[times.len() - 1];
    let dt = times[1] - times[0];

    // first 1/e crossing of the gap towards its final value
    let final_gap = problem.gap[problem.gap.len() - 1];
    let target = final_gap * (T::one() - (-T::one()).exp());
    let tau0 = times
        .iter()
        .zip(&problem.gap)
        .skip(1)
        .find(|&(_, &g)| final_gap > T::zero() && g >= target)
        .map_or(t_max, |(&t, _)| t)
        .max(dt);

    let mut best: Option<([T; 2], T, bool)> = None;
    for &n0 in &options.starts {
        let n0 = n0.max(options.n_min).min(options.n_max);
        let run = nelder_mead(
            |x| problem.cost(x),
            [tau0.ln(), n0],
            [T::lit(0.3), T::lit(0.2) * n0],
            options.x_tol,
            options.max_iter,
        );
        // polish from the best vertex with a fresh simplex
        let run = nelder_mead(
            |x| problem.cost(x),
            run.0,
            [T::lit(1e-3), T::lit(1e-3)],
            options.x_tol,
            options.max_iter,
        );
        if best.as_ref().map_or(true, |b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (x, _, converged) = best.expect("at least one start");
    let n = x[1].max(options.n_min).min(options.n_max);
    let (d2, ssr) = problem.project(x[0], n);
    let tau = x[0].exp();
    let scale = c0.abs().max(final_gap.abs());
    let identifiable = scale > T::zero() && d2 > options.min_relative_amplitude * scale;
    Ok(StretchedExpFit {
        delta: d2.sqrt(),
        tau,
        n_stretch: n,
        c0,
        residual_rms: (ssr / T::from_usize_lossy(times.len())).sqrt(),
        converged,
        identifiable,
        covers_decay: identifiable && t_max > tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::linear_grid;
    use crate::noise::{Correlation, StretchedExp};
    use proptest::prelude::*;

    fn sample(model: &StretchedExp<f64>, t_max: f64, n: usize) -> CorrelationCurve<f64> {
        let times = linear_grid(t_max, n);
        let values = times.iter().map(|&t| model.value(t)).collect();
        CorrelationCurve::new(times, values).unwrap()
    }

    #[test]
    fn recovers_exact_parameters() {
        for (n, tau, cinf) in [(1.0, 2e-3, 0.0), (2.0, 5e-3, 3e6), (0.6, 1e-3, 1e5), (3.5, 4e-3, 0.0)] {
            let model = StretchedExp {
                c_inf: cinf,
                delta2: 2e7,
                tau,
                n,
            };
            let fit = fit_stretched_exponential(&sample(&model, 4.0 * tau, 200), &FitOptions::default()).unwrap();
            assert!(fit.converged && fit.identifiable && fit.covers_decay);
            assert!((fit.n_stretch - n).abs() < 1e-6 * n, "{fit:?}");
            assert!((fit.tau - tau).abs() < 1e-6 * tau, "{fit:?}");
            assert!((fit.delta * fit.delta - 2e7).abs() < 1e-6 * 2e7, "{fit:?}");
            assert!((fit.c_inf() - cinf).abs() < 1e-6 * 2e7);
        }
    }

    #[test]
    fn constant_curve_is_not_identifiable() {
        let times = linear_grid(1.0, 50);
        let curve = CorrelationCurve::new(times, vec![5e6; 50]).unwrap();
        let fit = fit_stretched_exponential(&curve, &FitOptions::default()).unwrap();
        assert!(!fit.identifiable);
        assert!(!fit.covers_decay);
        assert_eq!(fit.delta, 0.0);
    }

    #[test]
    fn short_window_flags_missing_decay() {
        let model = StretchedExp {
            c_inf: 0.0,
            delta2: 1e6,
            tau: 1.0,
            n: 2.0,
        };
        let fit = fit_stretched_exponential(&sample(&model, 0.4, 60), &FitOptions::default()).unwrap();
        assert!(fit.identifiable);
        assert!(!fit.covers_decay);
    }

    #[test]
    fn rejects_tiny_curves() {
        let curve = CorrelationCurve::new(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert!(fit_stretched_exponential(&curve, &FitOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn fit_reproduces_noiseless_data(n in 0.5f64..4.0, frac in 0.0f64..0.8) {
            let model = StretchedExp { c_inf: frac * 1e6, delta2: 1e6, tau: 1e-2, n };
            let curve = sample(&model, 5e-2, 120);
            let fit = fit_stretched_exponential(&curve, &FitOptions::default()).unwrap();
            prop_assert!(fit.residual_rms < 1e-5 * 1e6, "{:?}", fit);
        }
    }
}
