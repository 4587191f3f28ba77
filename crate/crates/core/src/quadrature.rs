//! Gauss–Legendre rules and an adaptive bisection integrator.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Newton iteration on `P_n` in double precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (b + a) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<T>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Adaptive Gauss–Legendre: compares one panel against its two halves and
/// bisects until the difference is below `abs_tol + rel_tol·|I|`.
pub struct Adaptive<'a, T> {
    pub rule: &'a GaussLegendre<T>,
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
}

impl<'a, T: Real> Adaptive<'a, T> {
    pub fn integrate(&self, a: T, b: T, f: &mut impl FnMut(T) -> T) -> Result<T> {
        let whole = self.rule.integrate(a, b, &mut *f);
        self.refine(a, b, whole, 0, f)
    }

    /// Like [`Adaptive::integrate`] when the plain rule over `[a, b]` is already known.
    pub fn refine_from(&self, a: T, b: T, whole: T, f: &mut impl FnMut(T) -> T) -> Result<T> {
        self.refine(a, b, whole, 0, f)
    }

    fn refine(&self, a: T, b: T, whole: T, depth: usize, f: &mut impl FnMut(T) -> T) -> Result<T> {
        let mid = (a + b) * T::lit(0.5);
        let left = self.rule.integrate(a, mid, &mut *f);
        let right = self.rule.integrate(mid, b, &mut *f);
        let both = left + right;
        let tol = self.abs_tol + self.rel_tol * both.abs();
        // stop once the interval cannot be split further in floating point
        let floor = T::epsilon() * T::lit(64.0) * a.abs().max(b.abs());
        if (both - whole).abs() <= tol || b - a <= floor {
            return Ok(both);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNonConvergence(format!(
                "interval [{a}, {b}] still off by {} after {depth} bisections",
                (both - whole).abs()
            )));
        }
        let half_abs = self.abs_tol * T::lit(0.5);
        let sub = Adaptive {
            rule: self.rule,
            abs_tol: half_abs,
            rel_tol: self.rel_tol,
            max_depth: self.max_depth,
        };
        Ok(sub.refine(a, mid, left, depth + 1, f)? + sub.refine(mid, b, right, depth + 1, f)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(8);
        let sum: f64 = gl.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_handles_cusp() {
        let gl = GaussLegendre::<f64>::new(10);
        let ad = Adaptive {
            rule: &gl,
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_depth: 60,
        };
        let v = ad.integrate(0.0, 1.0, &mut |x: f64| x.sqrt()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }
}
