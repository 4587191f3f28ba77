//! Scenario presets: orientation sweep of the bath correlation (`fig1`),
//! quantum versus Gaussian decoherence across fields (`fig2`) and
//! dynamical-decoupling spectroscopy far from and near the clock transition
//! (`fig3`).

use rayon::prelude::*;
use serde::Serialize;

use super::{
    bath_for, resolve_scenarios, run_correlation, run_experiment, CorrelationOutput, ExperimentConfig,
    ExperimentOutput, ModelSelector, ResolvedScenario, Scenario,
};
use crate::cce::CceContext;
use crate::curve::{CoherenceCurve, CorrelationCurve};
use crate::error::{Error, Result};
use crate::noise::{fit_stretched_exponential, Extrapolation, FitOptions, FreqQuadrature, NoiseSpectrum, StretchedExpFit};
use crate::pulse::PulseSequence;
use crate::spectroscopy::{check_resolution, extract_from_curve, predict_decoherence};

pub const FIG1_ANGLES: [f64; 7] = [0.0, 15.0, 30.0, 45.0, 55.0, 70.0, 90.0];
pub const HIGH_FIELD_MT: f64 = 468.65;
/// Spectrum samples read from `|L|` below this are left out of band comparisons.
pub const MIN_PROBED_COHERENCE: f64 = 0.05;

fn near_ct(offset_mt: f64, t_max_s: f64) -> Scenario {
    Scenario {
        plus: "5,-1".into(),
        minus: "4,-2".into(),
        field_mt: None,
        offset_mt: Some(offset_mt),
        t_max_s: Some(t_max_s),
    }
}

fn high_field(t_max_s: f64) -> Scenario {
    Scenario {
        plus: "5,-4".into(),
        minus: "4,-5".into(),
        field_mt: Some(HIGH_FIELD_MT),
        offset_mt: None,
        t_max_s: Some(t_max_s),
    }
}

/// Correlation at the clock transition, 50 configurations over 20 ms.
pub fn fig1_config(base: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        n_configurations: 50,
        time_points: 401,
        scenarios: vec![near_ct(0.0, 0.02)],
        ..base.clone()
    }
}

#[derive(Clone, Debug)]
pub struct OrientationRow {
    pub theta_deg: f64,
    pub correlation: CorrelationOutput,
}

/// Averaged `C(t)` and its fit for each field angle in the [001]–[110] plane.
pub fn fig1(cfg: &ExperimentConfig, thetas: &[f64]) -> Result<Vec<OrientationRow>> {
    thetas
        .iter()
        .map(|&theta| {
            let mut c = cfg.clone();
            c.bath.orientation = format!("theta:{theta}");
            Ok(OrientationRow {
                theta_deg: theta,
                correlation: run_correlation(&c)?,
            })
        })
        .collect()
}

/// Near-CT offsets 0.15, 9 and 35 mT and the high-field transition, Hahn and
/// a CPMG ladder, both models.
pub fn fig2_config(base: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSelector::Both,
        n_configurations: 20,
        time_points: 201,
        sequences: ["hahn", "cpmg:2", "cpmg:4", "cpmg:8", "cpmg:16", "cpmg:32", "cpmg:64", "cpmg:128"]
            .map(String::from)
            .to_vec(),
        scenarios: vec![near_ct(0.15, 2.0), near_ct(9.0, 0.2), near_ct(35.0, 0.05), high_field(0.02)],
        ..base.clone()
    }
}

pub fn fig2(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment(cfg)
}

/// One bath configuration, far from (+100 mT) and near (+1 mT) the clock
/// transition; CPMG-100 spectroscopy with predictions for other pulse numbers.
pub fn fig3_config(base: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSelector::Quantum,
        n_configurations: 1,
        time_points: 201,
        sequences: ["cpmg:100", "cpmg:16", "cpmg:32", "cpmg:64"].map(String::from).to_vec(),
        scenarios: vec![near_ct(100.0, 0.05), near_ct(1.0, 0.5)],
        ..base.clone()
    }
}

#[derive(Clone, Debug)]
pub struct SpectroscopyComparison {
    pub sequence: String,
    pub quantum: CoherenceCurve<f64>,
    pub predicted: CoherenceCurve<f64>,
    pub coverage: Vec<f64>,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct SpectroscopyPanel {
    pub scenario: ResolvedScenario,
    /// spectrum read off the first sequence
    pub extracted: NoiseSpectrum<f64>,
    /// CCE correlation lines seen through the lag window of each extraction time
    pub reference: NoiseSpectrum<f64>,
    /// see [`MIN_PROBED_COHERENCE`]
    pub probed: Vec<bool>,
    pub correlation_fit: StretchedExpFit<f64>,
    pub comparisons: Vec<SpectroscopyComparison>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandError {
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// largest `|S_extracted/S_reference − 1|` over the band
    pub worst_relative: f64,
}

impl SpectroscopyPanel {
    /// Relative spectrum error over the probed samples where the reference
    /// exceeds `floor·max(S_reference)`.
    pub fn band_error(&self, floor: f64) -> Option<BandError> {
        band_error(&self.extracted, &self.reference, &self.probed, floor)
    }
}

/// Per extracted frequency, whether `|L|` at the matching time is at least [`MIN_PROBED_COHERENCE`].
fn probed_mask(curve: &CoherenceCurve<f64>) -> Vec<bool> {
    let mut mask: Vec<bool> = curve
        .times
        .iter()
        .zip(curve.magnitudes())
        .filter(|(&t, _)| t > 0.0)
        .map(|(_, m)| m >= MIN_PROBED_COHERENCE)
        .collect();
    mask.reverse();
    mask
}

fn band_error(
    extracted: &NoiseSpectrum<f64>,
    reference: &NoiseSpectrum<f64>,
    probed: &[bool],
    floor: f64,
) -> Option<BandError> {
    let top = reference
        .values
        .iter()
        .zip(probed)
        .filter(|(_, &p)| p)
        .map(|(&v, _)| v)
        .fold(0.0, f64::max);
    let mut out: Option<BandError> = None;
    for (((&w, &a), &b), &p) in extracted.omega.iter().zip(&extracted.values).zip(&reference.values).zip(probed) {
        if !p || b <= floor * top {
            continue;
        }
        let e = (a / b - 1.0).abs();
        let band = out.get_or_insert(BandError {
            omega_lo: w,
            omega_hi: w,
            worst_relative: 0.0,
        });
        band.omega_lo = band.omega_lo.min(w);
        band.omega_hi = band.omega_hi.max(w);
        band.worst_relative = band.worst_relative.max(e);
    }
    out
}

pub fn fig3(cfg: &ExperimentConfig) -> Result<Vec<SpectroscopyPanel>> {
    cfg.validate()?;
    let scenarios = resolve_scenarios(cfg)?;
    let seqs = cfg.parsed_sequences()?;
    let bath = bath_for(cfg, 0)?;
    let quad = FreqQuadrature::coarse();
    scenarios
        .into_par_iter()
        .map(|sc| {
            let ctx = CceContext::new(&bath, cfg.cce.options(sc.times.clone()))?;
            let quantum: Vec<CoherenceCurve<f64>> =
                seqs.iter().map(|s| ctx.coherence(&sc.transition, s)).collect::<Result<_>>()?;
            let n0 = seqs[0].pulse_count();
            let extracted = extract_from_curve(&quantum[0], n0, sc.transition.p_e, Extrapolation::PowerLaw)?;
            let probed = probed_mask(&quantum[0]);

            let lines = ctx.correlation_lines(&sc.transition)?;
            let corr = CorrelationCurve::new(sc.times.clone(), sc.times.iter().map(|&t| lines.value(t)).collect())?;
            let fit = fit_stretched_exponential(&corr, &FitOptions::default())?;
            let n0 = n0 as f64;
            let values = extracted
                .omega
                .iter()
                .map(|&w| lines.windowed_spectrum(w, std::f64::consts::PI * n0 / w))
                .collect();
            let reference = NoiseSpectrum::from_samples(extracted.omega.clone(), values, 0.0, Extrapolation::Zero)?;

            let comparisons = seqs
                .iter()
                .zip(&quantum)
                .skip(1)
                .map(|(seq, q)| predict_against(&extracted, seq, q, sc.transition.p_e, &quad))
                .collect::<Result<_>>()?;
            Ok(SpectroscopyPanel {
                scenario: sc,
                extracted,
                reference,
                probed,
                correlation_fit: fit,
                comparisons,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AveragedSpectra {
    pub scenario: ResolvedScenario,
    pub extracted: NoiseSpectrum<f64>,
    pub reference: NoiseSpectrum<f64>,
    /// probed in every configuration
    pub probed: Vec<bool>,
}

impl AveragedSpectra {
    pub fn band_error(&self, floor: f64) -> Option<BandError> {
        band_error(&self.extracted, &self.reference, &self.probed, floor)
    }
}

/// Extracted and windowed CCE spectra of one configuration under `seq`.
fn spectra_for(
    cfg: &ExperimentConfig,
    sc: &ResolvedScenario,
    seq: &PulseSequence<f64>,
    index: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>)> {
    let bath = bath_for(cfg, index)?;
    let ctx = CceContext::new(&bath, cfg.cce.options(sc.times.clone()))?;
    let curve = ctx.coherence(&sc.transition, seq)?;
    let n = seq.pulse_count();
    let extracted = extract_from_curve(&curve, n, sc.transition.p_e, Extrapolation::PowerLaw)?;
    let lines = ctx.correlation_lines(&sc.transition)?;
    let reference = extracted
        .omega
        .iter()
        .map(|&w| lines.windowed_spectrum(w, std::f64::consts::PI * n as f64 / w))
        .collect();
    Ok((extracted.omega, extracted.values, reference, probed_mask(&curve)))
}

/// Configuration averages of the extracted and windowed CCE spectra for
/// every scenario, using the first sequence of `cfg`.
pub fn averaged_spectra(cfg: &ExperimentConfig) -> Result<Vec<AveragedSpectra>> {
    cfg.validate()?;
    let seq = cfg.parsed_sequences()?.swap_remove(0);
    resolve_scenarios(cfg)?
        .into_iter()
        .map(|sc| {
            let parts: Vec<_> = (0..cfg.n_configurations)
                .into_par_iter()
                .map(|c| {
                    spectra_for(cfg, &sc, &seq, c).map_err(|e| Error::InConfiguration {
                        index: c,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<_>>()?;
            let n = parts.len() as f64;
            let omega = parts[0].0.clone();
            let mut ext = vec![0.0; omega.len()];
            let mut refs = vec![0.0; omega.len()];
            let mut probed = vec![true; omega.len()];
            for (_, e, r, p) in &parts {
                for k in 0..omega.len() {
                    ext[k] += e[k] / n;
                    refs[k] += r[k] / n;
                    probed[k] &= p[k];
                }
            }
            Ok(AveragedSpectra {
                scenario: sc,
                extracted: NoiseSpectrum::from_samples(omega.clone(), ext, 0.0, Extrapolation::PowerLaw)?,
                reference: NoiseSpectrum::from_samples(omega, refs, 0.0, Extrapolation::Zero)?,
                probed,
            })
        })
        .collect()
}

/// Prediction on the part of the quantum grid whose first filter peak lies
/// inside the table and is resolved by it.
fn predict_against(
    spectrum: &NoiseSpectrum<f64>,
    seq: &PulseSequence<f64>,
    quantum: &CoherenceCurve<f64>,
    p_e: f64,
    quad: &FreqQuadrature<f64>,
) -> Result<SpectroscopyComparison> {
    let n = seq.pulse_count() as f64;
    let (lo, hi) = (spectrum.omega[0], *spectrum.omega.last().unwrap());
    let keep: Vec<usize> = (0..quantum.len())
        .filter(|&k| {
            let t = quantum.times[k];
            t > 0.0 && {
                let w = std::f64::consts::PI * n / t;
                w >= lo && w <= hi && check_resolution(spectrum, seq, t).is_ok()
            }
        })
        .collect();
    let times: Vec<f64> = keep.iter().map(|&k| quantum.times[k]).collect();
    let q = CoherenceCurve {
        times: times.clone(),
        values: keep.iter().map(|&k| quantum.values[k]).collect(),
        meta: quantum.meta.clone(),
    };
    let pred = predict_decoherence(spectrum, seq, p_e, &times, quad)?;
    Ok(SpectroscopyComparison {
        sequence: seq.label(),
        quantum: q,
        predicted: pred.curve,
        coverage: pred.coverage,
        flagged: pred.flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        let base = ExperimentConfig::default();
        for cfg in [fig1_config(&base), fig2_config(&base), fig3_config(&base)] {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn small_orientation_sweep_runs() {
        let mut cfg = fig1_config(&ExperimentConfig::default());
        cfg.bath.cutoff_nm = 2.0;
        cfg.n_configurations = 2;
        cfg.time_points = 101;
        let rows = fig1(&cfg, &[0.0, 90.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.correlation.mean.c0 > 0.0));
    }
}
