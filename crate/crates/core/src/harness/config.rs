//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{FieldOrientation, HyperfineModel, HyperfineTable, LatticeSpec, SI_LATTICE_CONSTANT};
use crate::cce::CceOptions;
use crate::curve::linear_grid;
use crate::error::{Error, Result};
use crate::levels::{DonorParams, StateLabel};
use crate::noise::AmplitudeMode;
use crate::pulse::PulseSequence;

const TWO_PI: f64 = std::f64::consts::TAU;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelector {
    Quantum,
    Gaussian,
    Both,
}

impl ModelSelector {
    pub fn quantum(self) -> bool {
        matches!(self, Self::Quantum | Self::Both)
    }

    pub fn gaussian(self) -> bool {
        matches!(self, Self::Gaussian | Self::Both)
    }
}

/// How the Gaussian model obtains `Φ(t)` from a configuration's correlation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianDomain {
    /// closed form over the cluster correlation lines
    #[default]
    Lines,
    /// double time integral of `C(t)`
    Time,
    /// fitted spectrum of the sampled `C(t)`
    Freq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DonorSection {
    pub a0_ghz: f64,
    pub gamma_e_ghz_per_t: f64,
    pub gamma_n_mhz_per_t: f64,
    /// twice the donor nuclear spin
    pub nuclear_spin_twice: u32,
}

impl Default for DonorSection {
    fn default() -> Self {
        Self {
            a0_ghz: 1.4754,
            gamma_e_ghz_per_t: 27.997,
            gamma_n_mhz_per_t: 6.963,
            nuclear_spin_twice: 9,
        }
    }
}

impl DonorSection {
    pub fn params(&self) -> DonorParams<f64> {
        DonorParams {
            electron_twice: 1,
            nuclear_twice: self.nuclear_spin_twice,
            hyperfine: TWO_PI * self.a0_ghz * 1e9,
            gamma_e: TWO_PI * self.gamma_e_ghz_per_t * 1e9,
            gamma_n: TWO_PI * self.gamma_n_mhz_per_t * 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub cutoff_nm: f64,
    pub abundance: f64,
    /// `001`, `111`, `110`, `theta:<deg>` or `x,y,z`
    pub orientation: String,
    pub a_max_mhz: f64,
    pub bohr_radius_nm: f64,
    /// site table replacing the isotropic envelope
    pub hyperfine_table: Option<PathBuf>,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            cutoff_nm: 4.5,
            abundance: 0.047,
            orientation: "110".into(),
            a_max_mhz: 1.0,
            bohr_radius_nm: 1.0,
            hyperfine_table: None,
        }
    }
}

impl BathSection {
    pub fn lattice(&self) -> LatticeSpec<f64> {
        LatticeSpec {
            lattice_constant: SI_LATTICE_CONSTANT,
            cutoff_radius: self.cutoff_nm * 1e-9,
            abundance: self.abundance,
        }
    }

    pub fn orientation(&self) -> Result<FieldOrientation<f64>> {
        FieldOrientation::parse(&self.orientation)
    }

    pub fn hyperfine_model(&self) -> Result<HyperfineModel<f64>> {
        match &self.hyperfine_table {
            Some(path) => {
                let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                let table = HyperfineTable::read(std::io::BufReader::new(file), SI_LATTICE_CONSTANT)?;
                Ok(HyperfineModel::Table(table))
            }
            None => Ok(HyperfineModel::Isotropic {
                a_max: TWO_PI * self.a_max_mhz * 1e6,
                bohr_radius: self.bohr_radius_nm * 1e-9,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CceSection {
    pub order: usize,
    pub pair_cutoff_nm: f64,
    pub dipolar_floor: f64,
    pub mean_field: bool,
    pub bath_zeeman: f64,
    pub unit_disk_tolerance: f64,
}

impl Default for CceSection {
    fn default() -> Self {
        Self {
            order: 2,
            pair_cutoff_nm: 0.8,
            dipolar_floor: 0.0,
            mean_field: true,
            bath_zeeman: 0.0,
            unit_disk_tolerance: crate::cce::UNIT_DISK_SLACK,
        }
    }
}

impl CceSection {
    pub fn options(&self, grid: Vec<f64>) -> CceOptions<f64> {
        CceOptions {
            max_order: self.order,
            pair_cutoff: self.pair_cutoff_nm * 1e-9,
            dipolar_floor: self.dipolar_floor,
            mean_field: self.mean_field,
            time_grid: grid,
            bath_zeeman: self.bath_zeeman,
            unit_disk_tolerance: self.unit_disk_tolerance,
        }
    }
}

/// One transition at one field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub plus: String,
    pub minus: String,
    /// absolute field
    #[serde(default)]
    pub field_mt: Option<f64>,
    /// offset from the clock transition of this pair
    #[serde(default)]
    pub offset_mt: Option<f64>,
    /// overrides the global time window
    #[serde(default)]
    pub t_max_s: Option<f64>,
}

impl Scenario {
    pub fn labels(&self) -> Result<(StateLabel, StateLabel)> {
        Ok((self.plus.parse()?, self.minus.parse()?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSelector,
    pub gaussian_domain: GaussianDomain,
    pub amplitude_mode: AmplitudeMode,
    pub sequences: Vec<String>,
    pub n_configurations: usize,
    pub root_seed: u64,
    pub t_max_s: f64,
    pub time_points: usize,
    /// field range searched for clock transitions
    pub ct_search_mt: [f64; 2],
    pub donor: DonorSection,
    pub bath: BathSection,
    pub cce: CceSection,
    pub scenarios: Vec<Scenario>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSelector::Both,
            gaussian_domain: GaussianDomain::Lines,
            amplitude_mode: AmplitudeMode::OracleDerived,
            sequences: vec!["hahn".into()],
            n_configurations: 20,
            root_seed: 1,
            t_max_s: 1.0,
            time_points: 41,
            ct_search_mt: [50.0, 120.0],
            donor: DonorSection::default(),
            bath: BathSection::default(),
            cce: CceSection::default(),
            scenarios: vec![Scenario {
                plus: "5,-1".into(),
                minus: "4,-2".into(),
                field_mt: None,
                offset_mt: Some(0.15),
                t_max_s: None,
            }],
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 over the canonical TOML form.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    pub fn parsed_sequences(&self) -> Result<Vec<PulseSequence<f64>>> {
        self.sequences.iter().map(|s| PulseSequence::parse(s)).collect()
    }

    pub fn grid(&self, scenario: &Scenario) -> Vec<f64> {
        linear_grid(scenario.t_max_s.unwrap_or(self.t_max_s), self.time_points)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.n_configurations == 0 {
            return bad("n_configurations must be at least 1");
        }
        if self.time_points < 2 || !(self.t_max_s > 0.0) {
            return bad("need t_max_s > 0 and at least two time points");
        }
        if self.sequences.is_empty() || self.scenarios.is_empty() {
            return bad("need at least one sequence and one scenario");
        }
        if !(self.ct_search_mt[0] >= 0.0 && self.ct_search_mt[1] > self.ct_search_mt[0]) {
            return bad("ct_search_mt must be an increasing pair");
        }
        self.parsed_sequences().map_err(|e| Error::Config(e.to_string()))?;
        self.donor.params().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.bath.lattice().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.bath.orientation().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(path) = &self.bath.hyperfine_table {
            if !path.exists() {
                return Err(Error::Config(format!("hyperfine table {} does not exist", path.display())));
            }
        }
        self.cce.options(vec![0.0, 1.0]).validate().map_err(|e| Error::Config(e.to_string()))?;
        for s in &self.scenarios {
            s.labels().map_err(|e| Error::Config(e.to_string()))?;
            match (s.field_mt, s.offset_mt) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => return bad("each scenario needs exactly one of field_mt or offset_mt"),
            }
            if let Some(t) = s.t_max_s {
                if !(t > 0.0) {
                    return bad("scenario t_max_s must be positive");
                }
            }
        }
        Ok(())
    }
}
