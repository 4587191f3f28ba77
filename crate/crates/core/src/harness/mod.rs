//! Experiment orchestration: ensemble runs over bath configurations, `T₂`
//! extraction and scenario presets.

mod config;
mod export;
pub mod presets;

pub use config::{
    sha256_hex, BathSection, CceSection, DonorSection, ExperimentConfig, GaussianDomain, ModelSelector, Scenario,
};
pub use export::{write_curve_csv, write_correlation_csv, write_spectrum_csv, write_summary, Summary, SummaryEntry, SCHEMA_VERSION};

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::bath::{generate_bath, BathConfiguration};
use crate::cce::CceContext;
use crate::curve::{CoherenceCurve, CorrelationCurve, CurveMeta};
use crate::error::{Error, Result};
use crate::levels::{find_clock_transition, transition, TransitionPair};
use crate::noise::{
    fit_stretched_exponential, gaussian_curve_freq, gaussian_curve_time, spectrum, FitOptions, FreqQuadrature,
    SampledCorrelation, StretchedExpFit,
};
use crate::pulse::PulseSequence;
use crate::seed::{child_seed, STREAM_PLACEMENT};

/// A scenario with its field and transition worked out.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedScenario {
    pub field_mt: f64,
    /// clock-transition field of the pair, when the scenario is given as an offset
    pub ct_field_mt: Option<f64>,
    pub transition: TransitionPair<f64>,
    #[serde(skip)]
    pub times: Vec<f64>,
}

impl ResolvedScenario {
    pub fn label(&self) -> String {
        format!("{}<->{}", self.transition.plus_label, self.transition.minus_label)
    }
}

pub fn resolve_scenarios(cfg: &ExperimentConfig) -> Result<Vec<ResolvedScenario>> {
    let params = cfg.donor.params();
    cfg.scenarios
        .iter()
        .map(|s| {
            let (plus, minus) = s.labels()?;
            let (field, ct) = match (s.field_mt, s.offset_mt) {
                (Some(b), _) => (b * 1e-3, None),
                (None, Some(off)) => {
                    let range = (cfg.ct_search_mt[0] * 1e-3, cfg.ct_search_mt[1] * 1e-3);
                    let ct = find_clock_transition(&params, plus, minus, range)?.field;
                    (ct + off * 1e-3, Some(ct))
                }
                (None, None) => return Err(Error::Config("scenario without a field".into())),
            };
            Ok(ResolvedScenario {
                field_mt: field * 1e3,
                ct_field_mt: ct.map(|b| b * 1e3),
                transition: transition(&params, field, plus, minus)?,
                times: cfg.grid(s),
            })
        })
        .collect()
}

/// `T₂` at a threshold of `|L|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoherenceTime {
    pub seconds: f64,
    /// the curve never crossed the threshold; `seconds` is the window length
    pub lower_bound: bool,
}

/// First downward crossing of `threshold` by `magnitudes`, linearly interpolated.
pub fn coherence_time(times: &[f64], magnitudes: &[f64], threshold: f64) -> CoherenceTime {
    for k in 1..times.len().min(magnitudes.len()) {
        let (a, b) = (magnitudes[k - 1], magnitudes[k]);
        if a > threshold && b <= threshold {
            let w = (a - threshold) / (a - b);
            return CoherenceTime {
                seconds: times[k - 1] + w * (times[k] - times[k - 1]),
                lower_bound: false,
            };
        }
        if k == 1 && a <= threshold {
            return CoherenceTime {
                seconds: times[0],
                lower_bound: false,
            };
        }
    }
    CoherenceTime {
        seconds: times.last().copied().unwrap_or(0.0),
        lower_bound: true,
    }
}

/// Three-point moving average with the end points kept.
pub fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            if k == 0 || k + 1 == n {
                values[k]
            } else {
                (values[k - 1] + values[k] + values[k + 1]) / 3.0
            }
        })
        .collect()
}

/// Slope of `ln(−ln|L|)` against `ln t` over `0.05 < |L| < 0.95`.
pub fn stretch_exponent(times: &[f64], magnitudes: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(magnitudes)
        .filter(|(&t, &m)| t > 0.0 && m > 0.05 && m < 0.95)
        .map(|(&t, &m)| (t.ln(), (-m.ln()).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub model: String,
    pub sequence: String,
    pub scenario: usize,
    pub field_mt: f64,
    pub transition: String,
    /// in configuration order
    pub curves: Vec<CoherenceCurve<f64>>,
    pub mean: CoherenceCurve<f64>,
    /// variance of `|L|` across configurations
    pub variance: Vec<f64>,
    pub t2: CoherenceTime,
    pub stretch: Option<f64>,
}

impl EnsembleResult {
    fn assemble(curves: Vec<CoherenceCurve<f64>>, scenario: usize, field_mt: f64) -> Self {
        let first = &curves[0];
        let n = curves.len() as f64;
        let len = first.len();
        let mut mean = vec![Complex::new(0.0, 0.0); len];
        let mut mag = vec![0.0; len];
        let mut mag2 = vec![0.0; len];
        for c in &curves {
            for (k, z) in c.values.iter().enumerate() {
                mean[k] += z;
                mag[k] += z.norm();
                mag2[k] += z.norm_sqr();
            }
        }
        mean.iter_mut().for_each(|z| *z /= n);
        let variance = mag
            .iter()
            .zip(&mag2)
            .map(|(m, m2)| (m2 / n - (m / n).powi(2)).max(0.0))
            .collect();
        let meta = CurveMeta {
            seed: 0,
            ..first.meta.clone()
        };
        let mean = CoherenceCurve {
            times: first.times.clone(),
            values: mean,
            meta,
        };
        let mags = mean.magnitudes();
        let t2 = coherence_time(&mean.times, &smooth3(&mags), (-1.0f64).exp());
        let stretch = stretch_exponent(&mean.times, &mags);
        Self {
            model: first.meta.model.clone(),
            sequence: first.meta.sequence.clone(),
            scenario,
            field_mt,
            transition: first.meta.transition.clone(),
            curves,
            mean,
            variance,
            t2,
            stretch,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config_hash: String,
    pub scenarios: Vec<ResolvedScenario>,
    /// ordered by scenario, then sequence, then model (quantum before gaussian)
    pub results: Vec<EnsembleResult>,
}

impl ExperimentOutput {
    pub fn find(&self, scenario: usize, model: &str, sequence: &str) -> Option<&EnsembleResult> {
        self.results
            .iter()
            .find(|r| r.scenario == scenario && r.model == model && r.sequence == sequence)
    }
}

pub fn bath_for(cfg: &ExperimentConfig, index: usize) -> Result<BathConfiguration<f64>> {
    let seed = child_seed(cfg.root_seed, STREAM_PLACEMENT, index as u64);
    generate_bath(&cfg.bath.lattice(), seed, cfg.bath.orientation()?, &cfg.bath.hyperfine_model()?)
}

fn gaussian_curve(
    cfg: &ExperimentConfig,
    ctx: &CceContext<f64>,
    tr: &TransitionPair<f64>,
    seqs: &[PulseSequence<f64>],
    times: &[f64],
    seed: u64,
) -> Result<Vec<CoherenceCurve<f64>>> {
    let lines = ctx.correlation_lines(tr)?;
    let meta = |seq: &PulseSequence<f64>| CurveMeta {
        model: "gaussian".into(),
        transition: format!("{}<->{}", tr.plus_label, tr.minus_label),
        sequence: seq.label(),
        seed,
    };
    match cfg.gaussian_domain {
        GaussianDomain::Lines => Ok(seqs
            .iter()
            .map(|seq| {
                let v = times.iter().map(|&t| lines.gaussian_coherence(seq, tr.p_e, t)).collect();
                CoherenceCurve::from_real(times.to_vec(), v, meta(seq))
            })
            .collect()),
        GaussianDomain::Time | GaussianDomain::Freq => {
            let sampled = CorrelationCurve::new(times.to_vec(), times.iter().map(|&t| lines.value(t)).collect())?;
            let fit = fit_stretched_exponential(&sampled, &FitOptions::default())?;
            if cfg.gaussian_domain == GaussianDomain::Time {
                let corr = SampledCorrelation::new(sampled, &fit)?;
                seqs.iter()
                    .map(|seq| gaussian_curve_time(&corr, seq, tr.p_e, times, meta(seq)))
                    .collect()
            } else {
                let spec = spectrum(&sampled, &fit, 400)?;
                let quad = FreqQuadrature::coarse();
                seqs.iter()
                    .map(|seq| gaussian_curve_freq(&spec, seq, tr.p_e, times, &quad, meta(seq)))
                    .collect()
            }
        }
    }
}

/// Curves of one configuration: `[scenario][sequence][model]`.
fn run_configuration(
    cfg: &ExperimentConfig,
    scenarios: &[ResolvedScenario],
    seqs: &[PulseSequence<f64>],
    index: usize,
) -> Result<Vec<Vec<Vec<CoherenceCurve<f64>>>>> {
    let bath = bath_for(cfg, index)?;
    scenarios
        .iter()
        .map(|sc| {
            let ctx = CceContext::new(&bath, cfg.cce.options(sc.times.clone()))?;
            let tr = &sc.transition;
            let mut per_seq: Vec<Vec<CoherenceCurve<f64>>> = vec![Vec::new(); seqs.len()];
            if cfg.model.quantum() {
                for (k, seq) in seqs.iter().enumerate() {
                    per_seq[k].push(ctx.coherence(tr, seq)?);
                }
            }
            if cfg.model.gaussian() {
                for (k, c) in gaussian_curve(cfg, &ctx, tr, seqs, &sc.times, bath.seed)?.into_iter().enumerate() {
                    per_seq[k].push(c);
                }
            }
            Ok(per_seq)
        })
        .collect()
}

/// Runs every configuration in parallel and averages in configuration order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let scenarios = resolve_scenarios(cfg)?;
    let seqs = cfg.parsed_sequences()?;
    let per_config: Vec<_> = (0..cfg.n_configurations)
        .into_par_iter()
        .map(|c| {
            run_configuration(cfg, &scenarios, &seqs, c).map_err(|e| Error::InConfiguration {
                index: c,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        for k in 0..seqs.len() {
            let n_models = per_config[0][s][k].len();
            for m in 0..n_models {
                let curves: Vec<_> = per_config.iter().map(|c| c[s][k][m].clone()).collect();
                results.push(EnsembleResult::assemble(curves, s, sc.field_mt));
            }
        }
    }
    Ok(ExperimentOutput {
        config_hash: cfg.hash(),
        scenarios,
        results,
    })
}

#[derive(Clone, Debug)]
pub struct CorrelationOutput {
    pub config_hash: String,
    pub scenario: ResolvedScenario,
    pub curves: Vec<CorrelationCurve<f64>>,
    pub mean: CorrelationCurve<f64>,
    pub fit: StretchedExpFit<f64>,
}

/// Configuration-averaged `C(t)` of the first scenario, with its stretched-exponential fit.
pub fn run_correlation(cfg: &ExperimentConfig) -> Result<CorrelationOutput> {
    cfg.validate()?;
    let scenario = resolve_scenarios(cfg)?.swap_remove(0);
    let curves: Vec<_> = (0..cfg.n_configurations)
        .into_par_iter()
        .map(|c| {
            bath_for(cfg, c)
                .and_then(|bath| CceContext::new(&bath, cfg.cce.options(scenario.times.clone()))?.correlation(&scenario.transition))
                .map_err(|e| Error::InConfiguration {
                    index: c,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let mean = CorrelationCurve::mean(&curves)?;
    let fit = fit_stretched_exponential(&mean, &FitOptions::default())?;
    Ok(CorrelationOutput {
        config_hash: cfg.hash(),
        scenario,
        curves,
        mean,
        fit,
    })
}
