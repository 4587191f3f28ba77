pub mod bath;
pub mod cce;
pub mod curve;
pub mod error;
pub mod levels;
pub mod linalg;
pub mod noise;
pub mod pulse;
pub mod quadrature;
pub mod scalar;
pub mod seed;
pub mod spectroscopy;
pub mod spin;
pub mod harness;

pub use error::{Error, Result};

pub type BathConfiguration = bath::BathConfiguration<f64>;
pub type CoherenceCurve = curve::CoherenceCurve<f64>;
pub type CorrelationCurve = curve::CorrelationCurve<f64>;
pub type DonorParams = levels::DonorParams<f64>;
pub type LatticeSpec = bath::LatticeSpec<f64>;
pub type NoiseSpectrum = noise::NoiseSpectrum<f64>;
pub type PulseSequence = pulse::PulseSequence<f64>;
pub type TransitionPair = levels::TransitionPair<f64>;
