//! Sampled coherence and correlation curves.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Checks that `times` is strictly increasing and, if `from_zero`, starts at 0.
pub fn validate_grid<T: Real>(times: &[T], from_zero: bool) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if from_zero && times[0] != T::zero() {
        return Err(Error::InvalidParameter(format!(
            "time grid must start at 0, got {}",
            times[0]
        )));
    }
    if !times.iter().all(|t| t.is_finite() && *t >= T::zero()) {
        return Err(Error::InvalidParameter("time grid has negative or non-finite entries".into()));
    }
    for k in 1..times.len() {
        if !(times[k] > times[k - 1]) {
            return Err(Error::NonIncreasingTimes(k));
        }
    }
    Ok(())
}

/// `n` equally spaced points on `[0, t_max]`.
pub fn linear_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    assert!(n >= 2);
    let step = t_max / T::from_usize_lossy(n - 1);
    (0..n).map(|k| step * T::from_usize_lossy(k)).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub model: String,
    pub transition: String,
    pub sequence: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceCurve<T> {
    pub times: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub meta: CurveMeta,
}

impl<T: Real> CoherenceCurve<T> {
    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Curve from real values, e.g. the Gaussian model.
    pub fn from_real(times: Vec<T>, values: Vec<T>, meta: CurveMeta) -> Self {
        let values = values.into_iter().map(|v| Complex::new(v, T::zero())).collect();
        Self { times, values, meta }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCurve<T> {
    pub times: Vec<T>,
    /// rad²/s²
    pub values: Vec<T>,
    pub c0: T,
}

impl<T: Real> CorrelationCurve<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        validate_grid(&times, true)?;
        if times.len() != values.len() {
            return Err(Error::InvalidParameter("times and values differ in length".into()));
        }
        let c0 = values[0];
        Ok(Self { times, values, c0 })
    }

    /// `C(t) − C(0)`
    pub fn relative(&self) -> Vec<T> {
        self.values.iter().map(|&v| v - self.c0).collect()
    }

    /// Pointwise mean of curves sampled on the same grid.
    pub fn mean(curves: &[Self]) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InvalidParameter("no curves to average".into()))?;
        let n = T::from_usize_lossy(curves.len());
        let mut values = vec![T::zero(); first.times.len()];
        for c in curves {
            if c.times != first.times {
                return Err(Error::InvalidParameter("curves use different time grids".into()));
            }
            for (acc, &v) in values.iter_mut().zip(&c.values) {
                *acc += v;
            }
        }
        values.iter_mut().for_each(|v| *v /= n);
        let c0 = values[0];
        Ok(Self {
            times: first.times.clone(),
            values,
            c0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_checks() {
        assert!(validate_grid(&[0.0, 1.0, 2.0], true).is_ok());
        assert!(validate_grid(&[0.5, 1.0], true).is_err());
        assert!(matches!(
            validate_grid(&[0.0, 1.0, 1.0], true),
            Err(Error::NonIncreasingTimes(2))
        ));
        assert_eq!(linear_grid(1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn mean_of_correlations() {
        let a = CorrelationCurve::new(vec![0.0, 1.0], vec![2.0, 1.0]).unwrap();
        let b = CorrelationCurve::new(vec![0.0, 1.0], vec![4.0, 1.0]).unwrap();
        let m = CorrelationCurve::mean(&[a, b]).unwrap();
        assert_eq!(m.values, vec![3.0, 1.0]);
        assert_eq!(m.c0, 3.0);
        assert_eq!(m.relative(), vec![0.0, -2.0]);
    }
}
