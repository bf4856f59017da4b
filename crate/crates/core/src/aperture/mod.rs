//! The vapor cell as a continuous 1-D aperture along `y ∈ [0, L]`.
//!
//! Plane-wave LO and SIG tones are referenced to `y = 0`:
//! `E(y, t) = E·exp(j(ωt + k·y·cos θ + φ))`. Rabi frequencies stand in for
//! field amplitudes throughout (`Ω = μ₃₄E/ħ`).

mod patterns;
mod response;

pub use patterns::{
    hpbw_theoretical, multipeak_response, pattern_multiband, pattern_multipeak, pattern_single_peak,
    MultipeakEvaluator, MultipeakPattern, SensitivityTable,
};
pub use response::{
    delta_p_full, delta_p_full_direct, delta_p_full_modulated, delta_p_full_series, delta_p_linearized, if_amplitude_full,
    synthesize_waveform,
    LinearizedResponse, WaveformModel, WaveformRequest,
};

use std::fmt::Write as _;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;
use crate::quantum::QuantumError;
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApertureError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("quantum model failed at y = {y:.6e} m: {source}")]
    AtPosition { y: f64, source: QuantumError },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("LO amplitude vanishes at y = {y:.6e} m; phase undefined")]
    AmplitudeNull { y: f64 },
    #[error("signal/LO Rabi ratio {ratio:.3} exceeds the strong-LO limit 0.1")]
    WeakLoViolation { ratio: f64 },
    #[error("sample rate {sample_rate} Hz must exceed 4x the highest IF ({max_if} Hz)")]
    AliasingRisk { sample_rate: f64, max_if: f64 },
    #[error("duration {duration} s shorter than 10 IF periods ({required} s)")]
    InsufficientDuration { duration: f64, required: f64 },
}

pub type Result<T> = std::result::Result<T, ApertureError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ApertureError::InvalidParameter(msg.into()))
}

/// Plane-wave RF tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfTone {
    /// Rabi frequency on the RF transition (rad/s).
    pub rabi: f64,
    /// Carrier angular frequency (rad/s).
    pub omega: f64,
    /// Arrival direction θ (degrees).
    pub direction_deg: f64,
    /// Initial phase φ (rad).
    pub phase: f64,
    /// Which RF transition (band) the tone drives.
    pub band_index: usize,
}

impl RfTone {
    pub fn new(rabi: f64, freq_hz: f64, direction_deg: f64, phase: f64) -> Self {
        Self { rabi, omega: 2.0 * PI * freq_hz, direction_deg, phase, band_index: 0 }
    }

    pub fn in_band(mut self, band_index: usize) -> Self {
        self.band_index = band_index;
        self
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.omega
    }

    pub fn wavenumber(&self) -> f64 {
        self.omega / SPEED_OF_LIGHT
    }

    pub fn cos_direction(&self) -> f64 {
        self.direction_deg.to_radians().cos()
    }

    fn check_common(&self) -> Result<()> {
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return invalid(format!("tone amplitude must be non-negative, got {}", self.rabi));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return invalid(format!("tone frequency must be positive, got {}", self.omega));
        }
        if !self.phase.is_finite() {
            return invalid("tone phase must be finite");
        }
        Ok(())
    }

    /// LO tones arrive from `[180°, 360°]` unless co-incident geometry is allowed.
    pub fn validate_lo(&self, coincident: bool) -> Result<()> {
        self.check_common()?;
        let ok = if coincident {
            (0.0..=360.0).contains(&self.direction_deg)
        } else {
            (180.0..=360.0).contains(&self.direction_deg)
        };
        if !ok {
            return invalid(format!("LO direction {}° outside [180°, 360°]", self.direction_deg));
        }
        Ok(())
    }

    /// SIG tones arrive from `[0°, 180°]` unless co-incident geometry is allowed.
    pub fn validate_sig(&self, coincident: bool) -> Result<()> {
        self.check_common()?;
        let ok = if coincident {
            (0.0..=360.0).contains(&self.direction_deg)
        } else {
            (0.0..=180.0).contains(&self.direction_deg)
        };
        if !ok {
            return invalid(format!("SIG direction {}° outside [0°, 180°]", self.direction_deg));
        }
        Ok(())
    }
}

/// One or more LO tones, grouped into bands by `band_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoConfiguration {
    pub tones: Vec<RfTone>,
    /// Accept LO and SIG from the same half-plane.
    #[serde(default)]
    pub coincident: bool,
}

impl LoConfiguration {
    pub fn single(tone: RfTone) -> Self {
        Self { tones: vec![tone], coincident: false }
    }

    pub fn new(tones: Vec<RfTone>) -> Self {
        Self { tones, coincident: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tones.is_empty() {
            return invalid("LO configuration needs at least one tone");
        }
        for t in &self.tones {
            t.validate_lo(self.coincident)?;
        }
        let bands = self.bands();
        for (i, (_, a)) in bands.iter().enumerate() {
            let f = a[0].omega;
            if a.iter().any(|t| (t.omega - f).abs() > 1e-9 * f) {
                return invalid(format!("band {} mixes LO frequencies", a[0].band_index));
            }
            for (_, b) in &bands[i + 1..] {
                if (b[0].omega - f).abs() <= 1e-9 * f {
                    return invalid("distinct bands must use distinct LO frequencies");
                }
            }
        }
        Ok(())
    }

    /// Tones grouped by band, ordered by band index.
    pub fn bands(&self) -> Vec<(usize, Vec<RfTone>)> {
        let mut out: Vec<(usize, Vec<RfTone>)> = Vec::new();
        for t in &self.tones {
            match out.iter_mut().find(|(b, _)| *b == t.band_index) {
                Some((_, v)) => v.push(*t),
                None => out.push((t.band_index, vec![*t])),
            }
        }
        out.sort_by_key(|(b, _)| *b);
        out
    }

    pub fn is_single_band(&self) -> bool {
        self.bands().len() == 1
    }

    pub fn max_rabi(&self) -> f64 {
        self.tones.iter().map(|t| t.rabi).fold(0.0, f64::max)
    }

    /// Complex LO Rabi sum at `y` (single band).
    pub fn field_at(&self, y: f64) -> Complex64 {
        self.tones
            .iter()
            .map(|t| Complex64::from_polar(t.rabi, t.wavenumber() * y * t.cos_direction() + t.phase))
            .sum()
    }
}

/// Composite LO amplitude `|Σ Ω_n e^{j(k y cos θ_n + φ_n)}|` and its
/// principal-value phase at `y`.
pub fn lo_profile(config: &LoConfiguration, y: f64) -> Result<(f64, f64)> {
    if !config.is_single_band() {
        return invalid("lo_profile needs all tones in one band");
    }
    let sum = config.field_at(y);
    if sum.norm() < 1e-12 * config.max_rabi() || config.max_rabi() == 0.0 {
        return Err(ApertureError::AmplitudeNull { y });
    }
    Ok((sum.norm(), sum.arg()))
}

/// Cell geometry and probe parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureGeometry {
    /// Cell length L (m).
    pub length: f64,
    /// Spatial quadrature nodes M.
    pub spatial_samples: usize,
    /// Probe input power (W).
    pub probe_input_power: f64,
    /// Probe wavenumber k_p (rad/m).
    pub probe_wavenumber: f64,
}

impl ApertureGeometry {
    /// Geometry with the default node count for LO wavelength `lambda_min`.
    pub fn new(length: f64, lambda_min: f64, probe_wavenumber: f64) -> Self {
        Self {
            length,
            spatial_samples: default_spatial_samples(length, lambda_min),
            probe_input_power: 1.5e-3,
            probe_wavenumber,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.01..=1.0).contains(&self.length) {
            return invalid(format!("cell length {} m outside [0.01, 1.0]", self.length));
        }
        if self.spatial_samples < 2 {
            return invalid("need at least two spatial samples");
        }
        if !(self.probe_input_power > 0.0 && self.probe_input_power.is_finite()) {
            return invalid("probe input power must be positive");
        }
        if !(self.probe_wavenumber > 0.0 && self.probe_wavenumber.is_finite()) {
            return invalid("probe wavenumber must be positive");
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        crate::numerics::linspace(0.0, self.length, self.spatial_samples)
    }
}

/// Odd node count giving ≥ 40 nodes per period of the fastest possible
/// integrand oscillation (`2k` along y), with a floor of 201.
pub fn default_spatial_samples(length: f64, lambda_min: f64) -> usize {
    let periods = 2.0 * length / lambda_min;
    let n = ((40.0 * periods).ceil() as usize).max(201);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// One band of a multiband LO configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub band_index: usize,
    /// LO wavelength λ_l,n (m).
    pub wavelength: f64,
    /// Relative coupling strength α_n of the band's transition.
    pub coupling_scale: f64,
    /// Intermediate frequency ω_δ,n (rad/s).
    pub if_frequency: f64,
}

impl BandConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.coupling_scale > 0.0) {
            return invalid("band wavelength and coupling scale must be positive");
        }
        Ok(())
    }
}

/// Normalized gain versus arrival angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    pub angles_deg: Vec<f64>,
    pub gains: Vec<f64>,
}

impl BeamPattern {
    /// Normalizes raw non-negative responses by their sampled maximum.
    pub fn from_raw(angles_deg: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        check_angles(&angles_deg)?;
        if angles_deg.len() != raw.len() {
            return invalid("angle and gain counts differ");
        }
        let peak = raw.iter().cloned().fold(0.0, f64::max);
        let gains = if peak > 0.0 { raw.iter().map(|g| g / peak).collect() } else { raw };
        Ok(Self { angles_deg, gains })
    }

    /// Wraps measured gains without renormalizing (gains may exceed 1).
    pub fn measured(angles_deg: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        check_angles(&angles_deg)?;
        if angles_deg.len() != gains.len() {
            return invalid("angle and gain counts differ");
        }
        if gains.iter().any(|g| !g.is_finite()) {
            return invalid("gains must be finite");
        }
        Ok(Self { angles_deg, gains })
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, g) in self.gains.iter().enumerate() {
            if *g > self.gains[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak_angle(&self) -> f64 {
        self.angles_deg[self.argmax()]
    }

    /// Linear interpolation of the gain at `angle_deg`.
    pub fn gain_at(&self, angle_deg: f64) -> f64 {
        let a = &self.angles_deg;
        if angle_deg <= a[0] {
            return self.gains[0];
        }
        if angle_deg >= a[a.len() - 1] {
            return self.gains[a.len() - 1];
        }
        let i = a.partition_point(|x| *x <= angle_deg) - 1;
        let f = (angle_deg - a[i]) / (a[i + 1] - a[i]);
        self.gains[i] * (1.0 - f) + self.gains[i + 1] * f
    }

    /// CSV with header `theta_deg,gain`; angles to 4 decimals, gains to 9
    /// significant digits, newline after every row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,gain\n");
        for (a, g) in self.angles_deg.iter().zip(&self.gains) {
            let _ = writeln!(out, "{:.4},{}", a, format_significant(*g, 9));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("theta_deg,gain") => {}
            other => return invalid(format!("expected header `theta_deg,gain`, got {other:?}")),
        }
        let mut angles = Vec::new();
        let mut gains = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| s.and_then(|v| v.trim().parse::<f64>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(a), Some(g), None) => {
                    angles.push(a);
                    gains.push(g);
                }
                _ => return invalid(format!("malformed CSV row {}: {line:?}", n + 2)),
            }
        }
        Self::measured(angles, gains)
    }
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return invalid("angle grid is empty");
    }
    if angles.iter().any(|a| !a.is_finite()) || angles.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("angles must be finite and strictly increasing");
    }
    Ok(())
}

/// `%.{digits}g`-style formatting, independent of locale.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').unwrap();
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    };
    s
}

/// Angle grid `start..=stop` with the given step (degrees).
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize + 1;
    (0..n).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}
