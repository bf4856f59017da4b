//! Quantities the experiments measure: beamwidths, AT splittings, the EIT-AT
//! angular response, and LO phases recovered from a measured pattern.

mod hpbw;
mod lorentzian;
mod phase_fit;
mod spectrum;

pub use hpbw::{measure_hpbw, HpbwMeasurement, WIDE_BEAM_DEG};
pub use lorentzian::{lorentzian_pair_fit, LorentzianPair};
pub use phase_fit::{fit_lo_phases, fit_with_evaluator, FitResult, PhaseFitOptions};
pub use spectrum::{coupling_grid, eit_at_angular_response, eit_spectrum, AtAngularResponse, SpectrumTrace};

use thiserror::Error;

use crate::aperture::ApertureError;
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Aperture(#[from] ApertureError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no half-power crossing inside the sampled {sector_deg}° sector")]
    NoCrossing { sector_deg: f64 },
    #[error("degenerate Lorentzian fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, EstimationError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(EstimationError::InvalidParameter(msg.into()))
}
