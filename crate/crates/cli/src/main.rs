use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spinbath::bath::{generate_bath, FieldOrientation, LatticeSpec, SI_LATTICE_CONSTANT};
use spinbath::curve::{linear_grid, CorrelationCurve};
use spinbath::harness::{
    self, presets, write_correlation_csv, write_curve_csv, write_spectrum_csv, write_summary, ExperimentConfig,
    GaussianDomain, ModelSelector, sha256_hex, SCHEMA_VERSION,
};
use spinbath::levels::{eigensystem, find_clock_transition, StateLabel};
use spinbath::noise::{fit_stretched_exponential, Extrapolation, FitOptions, FreqQuadrature, NoiseSpectrum};
use spinbath::pulse::PulseSequence;
use spinbath::spectroscopy::{check_resolution, extract_spectrum, predict_decoherence};
use spinbath::{Error, Result};

#[derive(Parser)]
#[command(name = "spinbath-ct", version, about = "Central-spin decoherence of Si:Bi near clock transitions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// root seed, overrides the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// number of bath configurations, overrides the configuration
    #[arg(long, global = true)]
    configurations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels and spin projections at one field
    Levels {
        #[arg(long)]
        field: f64,
    },
    /// Locate a clock transition
    FindCt {
        /// `F,mF:F,mF`
        #[arg(long, default_value = "5,-1:4,-2")]
        pair: String,
        /// `lo:hi` in mT
        #[arg(long, default_value = "50:120")]
        range: String,
    },
    /// Generate one bath configuration and write its site table
    /// (`--out` naming a `.csv` file writes there, otherwise `<out>/bath.csv`)
    Bath {
        #[arg(long, default_value_t = 4.5)]
        cutoff: f64,
        #[arg(long, default_value_t = 0.047)]
        abundance: f64,
        /// `001`, `111`, `110`, `theta:<deg>` or `x,y,z`
        #[arg(long, default_value = "110")]
        orient: String,
    },
    /// Ensemble coherence curves
    Coherence {
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        order: Option<usize>,
        /// how the Gaussian model is evaluated
        #[arg(long, value_enum)]
        domain: Option<DomainArg>,
    },
    /// Configuration-averaged bath correlation and its stretched-exponential fit
    Correlation {
        #[arg(long)]
        order: Option<usize>,
    },
    /// Fit a stretched exponential to a `t_s,C` table
    FitCorrelation { input: PathBuf },
    /// Dynamical-decoupling noise spectroscopy
    #[command(subcommand)]
    Spectroscopy(SpectroscopyCommand),
    /// Orientation sweep of the bath correlation
    Fig1 {
        #[arg(long)]
        order: Option<usize>,
    },
    /// Quantum versus Gaussian decoherence across fields and sequences
    Fig2,
    /// Spectroscopy far from and near the clock transition
    Fig3,
}

#[derive(Subcommand)]
enum SpectroscopyCommand {
    /// Spectrum from a CPMG-N coherence curve
    Extract {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pe: f64,
        curves: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Gaussian decoherence under a sequence from a tabulated spectrum
    Predict {
        #[arg(long)]
        seq: String,
        spectrum: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        pe: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Quantum,
    Gaussian,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Lines,
    Time,
    Freq,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.root_seed = seed;
    }
    if let Some(n) = g.configurations {
        cfg.n_configurations = n;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(out))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::parse("field range", format!("expected lo:hi in mT, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn parse_pair(s: &str) -> Result<(StateLabel, StateLabel)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::parse("state pair", format!("expected F,mF:F,mF, got {s:?}")))?;
    Ok((a.parse()?, b.parse()?))
}

/// Reads numeric columns by header name; `#` lines are comments.
fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let context = path.display().to_string();
    let headers = reader.headers().map_err(|e| Error::parse(&context, e.to_string()))?.clone();
    let index: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::parse(&context, format!("missing column {n}")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(&context, e.to_string()))?;
        for ((col, &i), name) in cols.iter_mut().zip(&index).zip(names) {
            let v = record
                .get(i)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(&context, format!("row {}: column {name} is not a number", row + 1)))?;
            col.push(v);
        }
    }
    Ok(cols)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Levels { field } => levels(g, field),
        Command::FindCt { pair, range } => find_ct(g, &pair, &range),
        Command::Bath {
            cutoff,
            abundance,
            orient,
        } => bath(g, cutoff, abundance, &orient),
        Command::Coherence { model, order, domain } => {
            let mut cfg = load_config(g)?;
            if let Some(m) = model {
                cfg.model = match m {
                    ModelArg::Quantum => ModelSelector::Quantum,
                    ModelArg::Gaussian => ModelSelector::Gaussian,
                    ModelArg::Both => ModelSelector::Both,
                };
            }
            if let Some(d) = domain {
                cfg.gaussian_domain = match d {
                    DomainArg::Lines => GaussianDomain::Lines,
                    DomainArg::Time => GaussianDomain::Time,
                    DomainArg::Freq => GaussianDomain::Freq,
                };
            }
            if let Some(o) = order {
                cfg.cce.order = o;
            }
            coherence(g, &cfg)
        }
        Command::Correlation { order } => {
            let mut cfg = load_config(g)?;
            if let Some(o) = order {
                cfg.cce.order = o;
            }
            correlation(g, &cfg)
        }
        Command::FitCorrelation { input } => fit_correlation(&input),
        Command::Spectroscopy(cmd) => spectroscopy(g, cmd),
        Command::Fig1 { order } => {
            let mut cfg = presets::fig1_config(&load_config(g)?);
            if let Some(n) = g.configurations {
                cfg.n_configurations = n;
            }
            if let Some(o) = order {
                cfg.cce.order = o;
            }
            fig1(g, &cfg)
        }
        Command::Fig2 => {
            let mut cfg = presets::fig2_config(&load_config(g)?);
            if let Some(n) = g.configurations {
                cfg.n_configurations = n;
            }
            coherence(g, &cfg)
        }
        Command::Fig3 => {
            let mut cfg = presets::fig3_config(&load_config(g)?);
            if let Some(n) = g.configurations {
                cfg.n_configurations = n;
            }
            fig3(g, &cfg)
        }
    }
}

fn levels(g: &Global, field_mt: f64) -> Result<()> {
    let cfg = load_config(g)?;
    if !(field_mt >= 0.0) {
        return Err(Error::Config("field must be non-negative".into()));
    }
    let set = eigensystem(&cfg.donor.params(), field_mt * 1e-3)?;
    let path = g.out.join("levels.csv");
    let mut out = create(&path)?;
    let r = (|| {
        writeln!(out, "B_mT,label,energy_GHz,P")?;
        for l in &set.levels {
            let ghz = l.energy / std::f64::consts::TAU / 1e9;
            writeln!(out, "{field_mt},\"{}\",{ghz:.9},{:.6}", l.label, l.sz)?;
        }
        out.flush()
    })();
    r.map_err(|e| Error::io(&path, e))?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct CtReport {
    plus: String,
    minus: String,
    ct_field_mt: f64,
    projection_crossing_mt: Option<f64>,
    separation_mt: Option<f64>,
}

fn find_ct(g: &Global, pair: &str, range: &str) -> Result<()> {
    let cfg = load_config(g)?;
    let (plus, minus) = parse_pair(pair)?;
    let (lo, hi) = parse_range(range)?;
    let ct = find_clock_transition(&cfg.donor.params(), plus, minus, (lo * 1e-3, hi * 1e-3))?;
    let report = CtReport {
        plus: plus.to_string(),
        minus: minus.to_string(),
        ct_field_mt: ct.field * 1e3,
        projection_crossing_mt: ct.projection_crossing.map(|b| b * 1e3),
        separation_mt: ct.separation.map(|b| b * 1e3),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn bath(g: &Global, cutoff_nm: f64, abundance: f64, orient: &str) -> Result<()> {
    let cfg = load_config(g)?;
    let spec = LatticeSpec {
        lattice_constant: SI_LATTICE_CONSTANT,
        cutoff_radius: cutoff_nm * 1e-9,
        abundance,
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let orientation = FieldOrientation::parse(orient).map_err(|e| Error::Config(e.to_string()))?;
    let bath = generate_bath(&spec, cfg.root_seed, orientation, &cfg.bath.hyperfine_model()?)?;
    let path = if g.out.extension().is_some_and(|e| e == "csv") {
        g.out.clone()
    } else {
        g.out.join("bath.csv")
    };
    let mut out = create(&path)?;
    bath.write_site_table(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    eprintln!("{} spins", bath.len());
    println!("{}", path.display());
    Ok(())
}

fn coherence(g: &Global, cfg: &ExperimentConfig) -> Result<()> {
    let out = harness::run_experiment(cfg)?;
    let summary = write_summary(&g.out, &out)?;
    for e in &summary.entries {
        let bound = if e.t2_lower_bound { ">" } else { "" };
        println!(
            "{:>9.3} mT  {:<9} {:<10} T2 = {bound}{:.6e} s",
            e.field_mt, e.model, e.sequence, e.t2_s
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    config_hash: &'a str,
    fit: &'a spinbath::noise::StretchedExpFit<f64>,
}

fn correlation(g: &Global, cfg: &ExperimentConfig) -> Result<()> {
    let out = harness::run_correlation(cfg)?;
    write_correlation_csv(&g.out.join("correlation.csv"), &out.mean, &out.config_hash)?;
    write_json(
        &g.out.join("correlation_fit.json"),
        &FitReport {
            schema_version: SCHEMA_VERSION,
            config_hash: &out.config_hash,
            fit: &out.fit,
        },
    )?;
    println!(
        "Delta = {:.6e} rad/s, tau = {:.6e} s, n = {:.4}, rms = {:.3e}",
        out.fit.delta, out.fit.tau, out.fit.n_stretch, out.fit.residual_rms
    );
    Ok(())
}

fn fit_correlation(input: &Path) -> Result<()> {
    let cols = read_columns(input, &["t_s", "C_rad2_s2"])?;
    let curve = CorrelationCurve::new(cols[0].clone(), cols[1].clone())?;
    let fit = fit_stretched_exponential(&curve, &FitOptions::default())?;
    let text = serde_json::to_string_pretty(&fit).expect("fit serializes");
    println!("{text}");
    Ok(())
}

fn spectroscopy(g: &Global, cmd: SpectroscopyCommand) -> Result<()> {
    match cmd {
        SpectroscopyCommand::Extract { n, pe, curves, output } => {
            let cols = read_columns(&curves, &["t_s", "abs_L"])?;
            let spectrum = extract_spectrum(&cols[0], &cols[1], n, pe, Extrapolation::PowerLaw)?;
            let path = output.unwrap_or_else(|| g.out.join("spectrum.csv"));
            let hash = sha256_hex(format!("extract n={n} pe={pe:e} {}", curves.display()).as_bytes());
            write_spectrum_csv(&path, &spectrum, &hash)?;
            println!("{}", path.display());
        }
        SpectroscopyCommand::Predict {
            seq,
            spectrum,
            pe,
            t_max,
            points,
            output,
        } => {
            let seq = PulseSequence::parse(&seq).map_err(|e| Error::Config(e.to_string()))?;
            if !(t_max > 0.0) || points < 2 {
                return Err(Error::Config("need --t-max > 0 and --points >= 2".into()));
            }
            let cols = read_columns(&spectrum, &["omega_rad_s", "S"])?;
            let table = NoiseSpectrum::from_samples(cols[0].clone(), cols[1].clone(), 0.0, Extrapolation::PowerLaw)?;
            let all: Vec<f64> = linear_grid(t_max, points).into_iter().skip(1).collect();
            let times: Vec<f64> = all.iter().copied().filter(|&t| check_resolution(&table, &seq, t).is_ok()).collect();
            if times.is_empty() {
                return check_resolution(&table, &seq, t_max);
            }
            if times.len() < all.len() {
                eprintln!("skipped {} times where the table cannot resolve the filter peak", all.len() - times.len());
            }
            let pred = predict_decoherence(&table, &seq, pe, &times, &FreqQuadrature::default())?;
            if pred.flagged {
                eprintln!("warning: part of the filter weight falls outside the tabulated band");
            }
            let path = output.unwrap_or_else(|| g.out.join("prediction.csv"));
            let hash = sha256_hex(
                format!("predict {} pe={pe:e} t_max={t_max:e} points={points} {}", seq.label(), spectrum.display()).as_bytes(),
            );
            write_curve_csv(&path, &pred.curve, &hash)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct OrientationEntry {
    theta_deg: f64,
    delta_rad_s: f64,
    tau_s: f64,
    n_stretch: f64,
    residual_over_delta2: f64,
    correlation_file: String,
}

#[derive(Serialize)]
struct OrientationSummary {
    schema_version: u32,
    config_hash: String,
    cce_order: usize,
    entries: Vec<OrientationEntry>,
}

fn fig1(g: &Global, cfg: &ExperimentConfig) -> Result<()> {
    let rows = presets::fig1(cfg, &presets::FIG1_ANGLES)?;
    let mut entries = Vec::new();
    for r in &rows {
        let c = &r.correlation;
        let name = format!("fig1_theta{:02}.csv", r.theta_deg.round() as i64);
        write_correlation_csv(&g.out.join(&name), &c.mean, &c.config_hash)?;
        let d2 = c.fit.delta * c.fit.delta;
        println!(
            "theta = {:>4.1}  Delta = {:.4e} rad/s  tau = {:.4e} s  n = {:.3}  rms/Delta^2 = {:.3}",
            r.theta_deg,
            c.fit.delta,
            c.fit.tau,
            c.fit.n_stretch,
            c.fit.residual_rms / d2
        );
        entries.push(OrientationEntry {
            theta_deg: r.theta_deg,
            delta_rad_s: c.fit.delta,
            tau_s: c.fit.tau,
            n_stretch: c.fit.n_stretch,
            residual_over_delta2: c.fit.residual_rms / d2,
            correlation_file: name,
        });
    }
    write_json(
        &g.out.join("fig1_summary.json"),
        &OrientationSummary {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.hash(),
            cce_order: cfg.cce.order,
            entries,
        },
    )
}

#[derive(Serialize)]
struct PanelEntry {
    field_mt: f64,
    p_plus: f64,
    p_minus: f64,
    spectrum_file: String,
    reference_file: String,
    worst_relative_error: Option<f64>,
    predictions: Vec<PredictionEntry>,
}

#[derive(Serialize)]
struct PredictionEntry {
    sequence: String,
    t2_quantum_s: f64,
    t2_predicted_s: f64,
    flagged: bool,
    quantum_file: String,
    predicted_file: String,
}

#[derive(Serialize)]
struct SpectroscopySummary {
    schema_version: u32,
    config_hash: String,
    panels: Vec<PanelEntry>,
}

fn fig3(g: &Global, cfg: &ExperimentConfig) -> Result<()> {
    let hash = cfg.hash();
    let panels = presets::fig3(cfg)?;
    let threshold = (-1.0f64).exp();
    let mut entries = Vec::new();
    for (k, p) in panels.iter().enumerate() {
        let spectrum_file = format!("fig3_s{k}_extracted.csv");
        let reference_file = format!("fig3_s{k}_reference.csv");
        write_spectrum_csv(&g.out.join(&spectrum_file), &p.extracted, &hash)?;
        write_spectrum_csv(&g.out.join(&reference_file), &p.reference, &hash)?;
        let mut predictions = Vec::new();
        for c in &p.comparisons {
            let tag: String = c.sequence.chars().filter(|ch| ch.is_ascii_alphanumeric()).collect();
            let quantum_file = format!("fig3_s{k}_{tag}_quantum.csv");
            let predicted_file = format!("fig3_s{k}_{tag}_predicted.csv");
            write_curve_csv(&g.out.join(&quantum_file), &c.quantum, &hash)?;
            write_curve_csv(&g.out.join(&predicted_file), &c.predicted, &hash)?;
            let tq = harness::coherence_time(&c.quantum.times, &c.quantum.magnitudes(), threshold);
            let tp = harness::coherence_time(&c.predicted.times, &c.predicted.magnitudes(), threshold);
            println!(
                "{:>9.3} mT  {:<9} T2 quantum {:.4e} s  predicted {:.4e} s{}",
                p.scenario.field_mt,
                c.sequence,
                tq.seconds,
                tp.seconds,
                if c.flagged { "  (partly outside band)" } else { "" }
            );
            predictions.push(PredictionEntry {
                sequence: c.sequence.clone(),
                t2_quantum_s: tq.seconds,
                t2_predicted_s: tp.seconds,
                flagged: c.flagged,
                quantum_file,
                predicted_file,
            });
        }
        entries.push(PanelEntry {
            field_mt: p.scenario.field_mt,
            p_plus: p.scenario.transition.p_plus,
            p_minus: p.scenario.transition.p_minus,
            spectrum_file,
            reference_file,
            worst_relative_error: p.band_error(0.01).map(|b| b.worst_relative),
            predictions,
        });
    }
    write_json(
        &g.out.join("fig3_summary.json"),
        &SpectroscopySummary {
            schema_version: SCHEMA_VERSION,
            config_hash: hash,
            panels: entries,
        },
    )
}
