//! Pair flip-flop model of the Overhauser-field correlation.

use super::LineSpectrum;
use crate::bath::BathConfiguration;
use crate::cce::SpinGraph;
use crate::curve::CorrelationCurve;
use crate::error::Result;
use crate::levels::TransitionPair;
use crate::scalar::Real;

/// Amplitude convention for the pair lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    /// `(A_i − A_j)² D² / (8(Z² + D²))`, the exact isolated-pair weight.
    #[default]
    OracleDerived,
    /// `2 Z² D² / (Z² + D²)`, smaller by `s²`.
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTerm<T> {
    pub i: usize,
    pub j: usize,
    /// `s (A_i − A_j)/4`, rad/s
    pub z: T,
    pub d: T,
    /// `2√(Z² + D²)`
    pub omega: T,
    pub amplitude: T,
}

impl<T: Real> PairTerm<T> {
    pub fn new(i: usize, j: usize, a_i: T, a_j: T, d: T, s: T, mode: AmplitudeMode) -> Self {
        let da = a_i - a_j;
        let z = s * da / T::lit(4.0);
        let r2 = z * z + d * d;
        let amplitude = if r2 == T::zero() {
            T::zero()
        } else {
            match mode {
                AmplitudeMode::OracleDerived => da * da * d * d / (T::lit(8.0) * r2),
                AmplitudeMode::Paper => T::lit(2.0) * z * z * d * d / r2,
            }
        };
        Self {
            i,
            j,
            z,
            d,
            omega: T::lit(2.0) * r2.sqrt(),
            amplitude,
        }
    }
}

/// `C(t) = C(0) − Σ_pairs a_ij (1 − cos ω_ij t)`, `C(0) = Σ A_i²/4`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairModel<T> {
    pub terms: Vec<PairTerm<T>>,
    pub c0: T,
}

impl<T: Real> PairModel<T> {
    /// Pairs are the edges of the spin graph at the given cutoff.
    pub fn build(
        bath: &BathConfiguration<T>,
        s: T,
        pair_cutoff: T,
        dipolar_floor: T,
        mode: AmplitudeMode,
    ) -> Result<Self> {
        let graph = SpinGraph::build(bath, pair_cutoff, dipolar_floor)?;
        let a = &bath.hyperfine;
        let terms = graph
            .edges()
            .map(|(i, j, d)| PairTerm::new(i, j, a[i], a[j], d, s, mode))
            .collect();
        let c0 = a.iter().map(|&x| x * x).sum::<T>() / T::lit(4.0);
        Ok(Self { terms, c0 })
    }

    pub fn lines(&self) -> LineSpectrum<T> {
        let mut spec = LineSpectrum::new();
        let mut moving = T::zero();
        for p in &self.terms {
            if p.amplitude != T::zero() {
                spec.push(p.omega, p.amplitude);
                moving += p.amplitude;
            }
        }
        spec.static_weight = self.c0 - moving;
        spec
    }

    pub fn value(&self, t: T) -> T {
        self.c0
            - self
                .terms
                .iter()
                .map(|p| p.amplitude * (T::one() - (p.omega * t).cos()))
                .sum::<T>()
    }
}

pub fn pair_flipflop_correlation<T: Real>(
    bath: &BathConfiguration<T>,
    transition: &TransitionPair<T>,
    pair_cutoff: T,
    mode: AmplitudeMode,
    times: &[T],
) -> Result<CorrelationCurve<T>> {
    let model = PairModel::build(bath, transition.s, pair_cutoff, T::zero(), mode)?;
    CorrelationCurve::new(times.to_vec(), times.iter().map(|&t| model.value(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::FieldOrientation;
    use crate::cce::{CceContext, CceOptions};
    use crate::curve::linear_grid;

    fn pair_bath(a: [f64; 2], sep_nm: f64) -> BathConfiguration<f64> {
        BathConfiguration::from_parts(
            vec![[0.0, 0.0, 1e-9], [0.0, 0.0, 1e-9 + sep_nm * 1e-9]],
            a.to_vec(),
            FieldOrientation::along(0.3, 0.1, 1.0).unwrap(),
        )
    }

    #[test]
    fn matches_exact_isolated_pair() {
        let bath = pair_bath([4.0e4, 1.0e4], 0.3);
        let tr = TransitionPair::from_projections(0.12, -0.05);
        let mut opts = CceOptions::new(linear_grid(2e-2, 31));
        opts.mean_field = false;
        let ctx = CceContext::new(&bath, opts).unwrap();
        let exact = ctx.correlation_lines(&tr).unwrap();
        let model = PairModel::build(&bath, tr.s, 0.8e-9, 0.0, AmplitudeMode::OracleDerived).unwrap();
        let c0 = model.c0;
        assert!((exact.total_weight() - c0).abs() < 1e-10 * c0);
        for k in 0..40 {
            let t = k as f64 * 7.3e-4;
            let (a, b) = (exact.value(t), model.value(t));
            assert!((a - b).abs() < 1e-10 * c0, "{t}: {a} {b}");
        }
        let lines = model.lines();
        assert!((lines.value(0.01) - model.value(0.01)).abs() < 1e-10 * c0);
    }

    #[test]
    fn alternative_amplitude_is_scaled_by_s_squared() {
        let s = 0.37f64;
        let a = PairTerm::new(0, 1, 3e4, -1e4, 900.0, s, AmplitudeMode::OracleDerived);
        let b = PairTerm::new(0, 1, 3e4, -1e4, 900.0, s, AmplitudeMode::Paper);
        assert!((b.amplitude - s * s * a.amplitude).abs() < 1e-12 * a.amplitude);
        assert_eq!(a.omega, b.omega);
    }

    #[test]
    fn frequency_is_pseudospin_gap() {
        let p = PairTerm::new(0, 1, 8e3, 2e3, 400.0, 1.0, AmplitudeMode::OracleDerived);
        let z: f64 = 6e3 / 4.0;
        assert!((p.omega - 2.0 * (z * z + 400.0f64 * 400.0).sqrt()).abs() < 1e-9);
    }
}
