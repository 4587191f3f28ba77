use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Jacobi eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("levels in the m_F = {m_f} block are degenerate (gap {gap:e} rad/s); adiabatic labels are ambiguous")]
    DegenerateLevels { m_f: String, gap: f64 },

    #[error("unknown state label {0}")]
    UnknownLabel(String),

    #[error("no sign change of {quantity} between {lo_mt} mT and {hi_mt} mT")]
    NoSignChange {
        quantity: &'static str,
        lo_mt: f64,
        hi_mt: f64,
    },

    #[error("no lattice sites within the cutoff radius {cutoff_nm} nm")]
    EmptyLattice { cutoff_nm: f64 },

    #[error("hyperfine table has no entry for the site at ({x_nm:.4}, {y_nm:.4}, {z_nm:.4}) nm")]
    MissingHyperfineSite { x_nm: f64, y_nm: f64, z_nm: f64 },

    #[error("two bath sites coincide")]
    CoincidentSites,

    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    #[error("time {t} s lies outside [0, {t_total}] s")]
    TimeOutOfRange { t: f64, t_total: f64 },

    #[error("cluster of size {size} exceeds the dense propagation limit of {max}")]
    ClusterTooLarge { size: usize, max: usize },

    #[error("CCE breakdown: sub-cluster {cluster:?} has |L| = {magnitude:e} at t = {time} s (strongly correlated bath)")]
    StronglyCorrelated {
        cluster: Vec<usize>,
        magnitude: f64,
        time: f64,
    },

    #[error("coherence magnitude {magnitude} exceeds 1 at t = {time} s")]
    UnphysicalCoherence { magnitude: f64, time: f64 },

    #[error("adaptive quadrature did not converge ({0})")]
    QuadratureNonConvergence(String),

    #[error("spectrum grid too coarse to resolve the filter peak: step {step} rad/s, need < {needed} rad/s")]
    UnresolvedFilterPeak { step: f64, needed: f64 },

    #[error("invalid coherence value {value} at t = {time} s (need 0 < L <= 1)")]
    InvalidCoherence { value: f64, time: f64 },

    #[error("time grid must be strictly increasing (violated at index {0})")]
    NonIncreasingTimes(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration {index}: {source}")]
    InConfiguration {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command line front end.
    ///
    /// 2: configuration or input error, 3: numerical breakdown, 4: I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InConfiguration { source, .. } => source.exit_code(),
            Error::Io { .. } => 4,
            Error::EigenNonConvergence { .. }
            | Error::DegenerateLevels { .. }
            | Error::StronglyCorrelated { .. }
            | Error::UnphysicalCoherence { .. }
            | Error::QuadratureNonConvergence(_) => 3,
            _ => 2,
        }
    }
}
