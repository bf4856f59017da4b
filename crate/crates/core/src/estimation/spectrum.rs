use std::collections::HashMap;

use serde::Serialize;

use super::{invalid, lorentzian_pair_fit, EstimationError, Result};
use crate::aperture::{ApertureGeometry, BeamPattern, RfTone};
use crate::quantum::{absorption, DopplerSpec, DriveParams, LevelScheme};

/// `Im[χ]` sampled over coupling detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTrace {
    /// Coupling detunings Δ_c (rad/s).
    pub detunings: Vec<f64>,
    pub absorption: Vec<f64>,
}

impl SpectrumTrace {
    pub fn new(detunings: Vec<f64>, absorption: Vec<f64>) -> Result<Self> {
        if detunings.len() != absorption.len() || detunings.len() < 2 {
            return invalid("trace needs matching detuning and absorption arrays of length ≥ 2");
        }
        if detunings.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("detunings must be strictly increasing");
        }
        if absorption.iter().any(|a| !a.is_finite()) {
            return invalid("absorption values must be finite");
        }
        Ok(Self { detunings, absorption })
    }
}

/// Uniform Δ_c grid of `points` samples spanning `±half_span` (rad/s).
pub fn coupling_grid(half_span: f64, points: usize) -> Vec<f64> {
    crate::numerics::linspace(-half_span, half_span, points)
}

/// `Im[χ]` at each coupling detuning; `drive.delta_c` is ignored.
pub fn eit_spectrum(
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    delta_c_grid: &[f64],
) -> Result<SpectrumTrace> {
    let absorption = delta_c_grid
        .iter()
        .map(|dc| absorption(scheme, &DriveParams { delta_c: *dc, ..*drive }, spec))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    SpectrumTrace::new(delta_c_grid.to_vec(), absorption)
}

/// EIT-AT (no LO) angular response: per-angle AT splittings and the pattern
/// of estimated field power `∝ splitting²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtAngularResponse {
    pub pattern: BeamPattern,
    /// Fitted AT splitting per angle (rad/s).
    pub splittings: Vec<f64>,
}

/// Sweeps a lone signal tone over arrival angles and estimates its strength
/// from the AT splitting of the cell's EIT spectrum.
///
/// Without an LO the atoms respond to the local field magnitude, which for a
/// plane wave is the same at every node and every angle. Spectra are
/// therefore cached by the field magnitude to 12 significant digits.
pub fn eit_at_angular_response(
    geometry: &ApertureGeometry,
    sig: &RfTone,
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    theta_s_deg: &[f64],
    delta_c_grid: &[f64],
) -> Result<AtAngularResponse> {
    geometry.validate()?;
    let mut cache: HashMap<String, f64> = HashMap::new();
    let mut splittings = Vec::with_capacity(theta_s_deg.len());
    for theta in theta_s_deg {
        let tone = RfTone { direction_deg: *theta, ..*sig };
        tone.validate_sig(true)?;
        let y = 0.5 * geometry.length;
        let field = crate::Complex64::from_polar(tone.rabi, tone.wavenumber() * y * tone.cos_direction() + tone.phase);
        let magnitude = field.norm();
        let key = format!("{magnitude:.11e}");
        let split = match cache.get(&key) {
            Some(v) => *v,
            None => {
                let trace = eit_spectrum(scheme, &drive.with_lo(magnitude), spec, delta_c_grid)?;
                let v = lorentzian_pair_fit(&trace)?.separation;
                cache.insert(key, v);
                v
            }
        };
        splittings.push(split);
    }
    let raw = splittings.iter().map(|s| s * s).collect();
    let pattern = BeamPattern::from_raw(theta_s_deg.to_vec(), raw).map_err(EstimationError::from)?;
    Ok(AtAngularResponse { pattern, splittings })
}

