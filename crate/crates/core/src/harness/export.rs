//! CSV and JSON writers. Every file starts with the schema version and the
//! configuration hash.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{CoherenceTime, ExperimentOutput};
use crate::curve::{CoherenceCurve, CorrelationCurve};
use crate::error::{Error, Result};
use crate::noise::NoiseSpectrum;

pub const SCHEMA_VERSION: u32 = 1;

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

fn header(out: &mut impl Write, hash: &str) -> std::io::Result<()> {
    writeln!(out, "# schema: spinbath-ct/{SCHEMA_VERSION}")?;
    writeln!(out, "# config_sha256: {hash}")
}

fn finish(path: &Path, r: std::io::Result<()>) -> Result<()> {
    r.map_err(|e| Error::io(path, e))
}

/// Columns `t_s,abs_L,re_L,im_L`.
pub fn write_curve_csv(path: &Path, curve: &CoherenceCurve<f64>, hash: &str) -> Result<()> {
    let mut out = create(path)?;
    let r = (|| {
        header(&mut out, hash)?;
        writeln!(out, "# model: {}, transition: {}, sequence: {}", curve.meta.model, curve.meta.transition, curve.meta.sequence)?;
        writeln!(out, "t_s,abs_L,re_L,im_L")?;
        for (t, z) in curve.times.iter().zip(&curve.values) {
            writeln!(out, "{t:e},{:e},{:e},{:e}", z.norm(), z.re, z.im)?;
        }
        out.flush()
    })();
    finish(path, r)
}

/// Columns `t_s,C_rad2_s2`.
pub fn write_correlation_csv(path: &Path, curve: &CorrelationCurve<f64>, hash: &str) -> Result<()> {
    let mut out = create(path)?;
    let r = (|| {
        header(&mut out, hash)?;
        writeln!(out, "t_s,C_rad2_s2")?;
        for (t, c) in curve.times.iter().zip(&curve.values) {
            writeln!(out, "{t:e},{c:e}")?;
        }
        out.flush()
    })();
    finish(path, r)
}

/// Columns `omega_rad_s,S`.
pub fn write_spectrum_csv(path: &Path, spectrum: &NoiseSpectrum<f64>, hash: &str) -> Result<()> {
    let mut out = create(path)?;
    let r = (|| {
        header(&mut out, hash)?;
        writeln!(out, "omega_rad_s,S")?;
        for (w, s) in spectrum.omega.iter().zip(&spectrum.values) {
            writeln!(out, "{w:e},{s:e}")?;
        }
        out.flush()
    })();
    finish(path, r)
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryEntry {
    pub model: String,
    pub sequence: String,
    pub field_mt: f64,
    pub transition: String,
    pub p_plus: f64,
    pub p_minus: f64,
    pub t2_s: f64,
    pub t2_lower_bound: bool,
    pub stretch_exponent: Option<f64>,
    pub curve_file: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_hash: String,
    pub entries: Vec<SummaryEntry>,
}

impl Summary {
    pub fn from_output(out: &ExperimentOutput) -> Self {
        let entries = out
            .results
            .iter()
            .map(|r| {
                let tr = &out.scenarios[r.scenario].transition;
                let CoherenceTime { seconds, lower_bound } = r.t2;
                SummaryEntry {
                    model: r.model.clone(),
                    sequence: r.sequence.clone(),
                    field_mt: r.field_mt,
                    transition: r.transition.clone(),
                    p_plus: tr.p_plus,
                    p_minus: tr.p_minus,
                    t2_s: seconds,
                    t2_lower_bound: lower_bound,
                    stretch_exponent: r.stretch,
                    curve_file: curve_file_name(r.scenario, &r.model, &r.sequence),
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: out.config_hash.clone(),
            entries,
        }
    }
}

pub fn curve_file_name(scenario: usize, model: &str, sequence: &str) -> String {
    let seq: String = sequence.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("s{scenario}_{model}_{seq}.csv")
}

/// Writes every mean curve and `summary.json` into `dir`.
pub fn write_summary(dir: &Path, out: &ExperimentOutput) -> Result<Summary> {
    let summary = Summary::from_output(out);
    for (r, e) in out.results.iter().zip(&summary.entries) {
        write_curve_csv(&dir.join(&e.curve_file), &r.mean, &out.config_hash)?;
    }
    let path = dir.join("summary.json");
    let mut file = create(&path)?;
    let r = serde_json::to_writer_pretty(&mut file, &summary)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(file))
        .and_then(|_| file.flush());
    finish(&path, r)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveMeta;

    #[test]
    fn curve_csv_layout() {
        let dir = std::env::temp_dir().join(format!("spinbath-export-{}", std::process::id()));
        let path = dir.join("c.csv");
        let curve = CoherenceCurve::from_real(vec![0.0, 1.0], vec![1.0, 0.5], CurveMeta::default());
        write_curve_csv(&path, &curve, "abc").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# schema: spinbath-ct/{SCHEMA_VERSION}"));
        assert_eq!(lines[1], "# config_sha256: abc");
        assert_eq!(lines[3], "t_s,abs_L,re_L,im_L");
        assert_eq!(lines.len(), 6);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let curve = CoherenceCurve::from_real(vec![0.0], vec![1.0], CurveMeta::default());
        let err = write_curve_csv(Path::new("/proc/nonexistent/x.csv"), &curve, "h").unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
