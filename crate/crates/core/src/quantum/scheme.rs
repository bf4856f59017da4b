use serde::{Deserialize, Serialize};

use super::{QuantumError, Result};
use crate::consts::BOLTZMANN;
use crate::{angular, Complex64};

/// Atomic constants of the ladder `|1⟩ → |2⟩ → |3⟩ → |4⟩`.
///
/// Rates are angular (rad/s). Defaults describe cesium
/// `6S₁/₂ → 6P₃/₂ → 59D₅/₂ → nP/nF` in a room-temperature cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Probe transition dipole moment (C·m).
    pub mu12: f64,
    /// RF transition dipole moment (C·m).
    pub mu34: f64,
    pub lambda_p: f64,
    pub lambda_c: f64,
    /// Atomic number density (m⁻³).
    pub n0: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Cell temperature (K).
    pub t_env: f64,
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            gamma2: angular(5.2e6),
            gamma3: angular(10e3),
            gamma4: angular(10e3),
            mu12: 1.9e-29,
            mu34: 1.5e-26,
            lambda_p: 852.347e-9,
            lambda_c: 509.0e-9,
            // Effective density of the addressed ground hyperfine level.
            n0: 1.0e16,
            mass: 2.206_946_5e-25,
            t_env: 300.0,
        }
    }
}

impl LevelScheme {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("mu12", self.mu12),
            ("mu34", self.mu34),
            ("lambda_p", self.lambda_p),
            ("lambda_c", self.lambda_c),
            ("n0", self.n0),
            ("mass", self.mass),
            ("t_env", self.t_env),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(QuantumError::InvalidParameter(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        let u = self.rms_velocity();
        if !(u.is_finite() && u > 0.0) {
            return Err(QuantumError::InvalidParameter(format!(
                "most-probable velocity is not positive: {u}"
            )));
        }
        Ok(())
    }

    /// Most-probable thermal speed `u = √(2·k_B·T/m)`.
    pub fn rms_velocity(&self) -> f64 {
        (2.0 * BOLTZMANN * self.t_env / self.mass).sqrt()
    }

    /// Probe wavenumber `2π/λ_p`.
    pub fn k_probe(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_p
    }

    /// Coupling wavenumber `2π/λ_c`.
    pub fn k_coupling(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_c
    }

    /// Rabi frequency (rad/s) on the RF transition for a field amplitude in V/m.
    pub fn rf_rabi(&self, field: f64) -> f64 {
        self.mu34 * field / crate::consts::HBAR
    }

    /// Returns the scheme with the temperature replaced so that the
    /// most-probable speed equals `u`.
    pub fn with_rms_velocity(&self, u: f64) -> Self {
        let mut out = self.clone();
        out.t_env = u * u * self.mass / (2.0 * BOLTZMANN);
        out
    }
}

/// Laser and RF drive of one atom, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega_p: f64,
    pub omega_c: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_l: f64,
    /// Composite RF Rabi frequency on `|3⟩ ↔ |4⟩`; its phase is the LO/SIG
    /// phase at the atom.
    pub omega_rf: Complex64,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self {
            omega_p: angular(5e6),
            omega_c: angular(1e6),
            delta_p: 0.0,
            delta_c: 0.0,
            delta_l: 0.0,
            omega_rf: Complex64::new(0.0, 0.0),
        }
    }
}

impl DriveParams {
    pub fn with_rf(mut self, omega_rf: Complex64) -> Self {
        self.omega_rf = omega_rf;
        self
    }

    pub fn with_lo(self, omega_l: f64) -> Self {
        self.with_rf(Complex64::new(omega_l, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p.is_finite() && self.omega_p >= 0.0) {
            return Err(QuantumError::InvalidParameter(format!(
                "omega_p must be non-negative, got {}",
                self.omega_p
            )));
        }
        if !(self.omega_c.is_finite() && self.omega_c >= 0.0) {
            return Err(QuantumError::InvalidParameter(format!(
                "omega_c must be non-negative, got {}",
                self.omega_c
            )));
        }
        let finite = [self.delta_p, self.delta_c, self.delta_l, self.omega_rf.re, self.omega_rf.im]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(QuantumError::InvalidParameter(
                "detunings and RF Rabi frequency must be finite".into(),
            ));
        }
        Ok(())
    }
}
