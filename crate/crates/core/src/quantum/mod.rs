//! Four-level ladder model: Hamiltonian, Lindblad steady state, Doppler
//! averaging, susceptibility and the LO sensitivity used by every pattern.

mod doppler;
mod hamiltonian;
mod scheme;
mod sensitivity;
mod steady;

pub use doppler::{doppler_averaged_coherence, DopplerSpec, VelocityRule};
pub use hamiltonian::build_hamiltonian;
pub use scheme::{DriveParams, LevelScheme};
pub use sensitivity::{sensitivity, sensitivity_richardson, DEFAULT_SENSITIVITY_STEP};
pub use steady::{liouvillian, steady_state, DensityMatrix, Liouvillian, Matrix4c};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular steady-state system (pivot ratio {pivot_ratio:.3e})")]
    SingularSystem { pivot_ratio: f64 },
    #[error("singular steady-state system at velocity node v = {velocity:.6e} m/s (pivot ratio {pivot_ratio:.3e})")]
    SingularAtVelocity { velocity: f64, pivot_ratio: f64 },
    #[error("finite-difference step {step:.3e} rad/s is below the solver noise floor")]
    StepTooSmall { step: f64 },
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Probe susceptibility from the Doppler-averaged coherence:
/// `χ = −2·N₀·μ₁₂² / (ε₀·ħ·Ω_p) · ρ̄₂₁`.
pub fn susceptibility(
    scheme: &LevelScheme,
    drive: &DriveParams,
    rho21_bar: crate::Complex64,
) -> crate::Complex64 {
    rho21_bar * (-susceptibility_scale(scheme, drive.omega_p))
}

/// Positive real factor `2·N₀·μ₁₂² / (ε₀·ħ·Ω_p)` relating ρ̄₂₁ to −χ.
pub fn susceptibility_scale(scheme: &LevelScheme, omega_p: f64) -> f64 {
    use crate::consts::{EPSILON_0, HBAR};
    2.0 * scheme.n0 * scheme.mu12 * scheme.mu12 / (EPSILON_0 * HBAR * omega_p)
}

/// `Im[χ]` of the Doppler-averaged medium for one drive.
pub fn absorption(scheme: &LevelScheme, drive: &DriveParams, spec: &DopplerSpec) -> Result<f64> {
    let rho = doppler_averaged_coherence(scheme, drive, spec)?;
    Ok(susceptibility(scheme, drive, rho).im)
}
