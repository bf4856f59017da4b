//! Configuration document and the built-in presets.

use std::f64::consts::PI;

use qaperture::aperture::{default_spatial_samples, ApertureGeometry, BandConfig, LoConfiguration, RfTone, WaveformModel};
use qaperture::comms::{
    noise_density_for, Interferer, Physics, QamStream, Scenario, User, KU_BAND_HZ, MULTIUSER_LO_RABI, REFERENCE_LO_DBM,
    REFERENCE_LO_RABI, S_BAND_HZ,
};
use qaperture::quantum::{DopplerSpec, DriveParams, LevelScheme};
use qaperture::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub atom: AtomSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<ApertureSection>,
    #[serde(default)]
    pub lo: Vec<LoSection>,
    #[serde(default)]
    pub signals: Vec<SignalSection>,
    #[serde(default)]
    pub comms: CommsSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub gamma2_rad_s: f64,
    pub gamma3_rad_s: f64,
    pub gamma4_rad_s: f64,
    pub mu12_c_m: f64,
    pub mu34_c_m: f64,
    pub probe_wavelength_m: f64,
    pub coupling_wavelength_m: f64,
    pub density_m3: f64,
    pub mass_kg: f64,
    pub temperature_k: f64,
    pub probe_rabi_rad_s: f64,
    pub coupling_rabi_rad_s: f64,
    pub probe_detuning_rad_s: f64,
    pub coupling_detuning_rad_s: f64,
    pub rf_detuning_rad_s: f64,
    pub doppler_nodes: usize,
    pub doppler_truncation: f64,
}

impl Default for AtomSection {
    fn default() -> Self {
        let s = LevelScheme::default();
        let d = DriveParams::default();
        let p = DopplerSpec::default();
        Self {
            gamma2_rad_s: s.gamma2,
            gamma3_rad_s: s.gamma3,
            gamma4_rad_s: s.gamma4,
            mu12_c_m: s.mu12,
            mu34_c_m: s.mu34,
            probe_wavelength_m: s.lambda_p,
            coupling_wavelength_m: s.lambda_c,
            density_m3: s.n0,
            mass_kg: s.mass,
            temperature_k: s.t_env,
            probe_rabi_rad_s: d.omega_p,
            coupling_rabi_rad_s: d.omega_c,
            probe_detuning_rad_s: d.delta_p,
            coupling_detuning_rad_s: d.delta_c,
            rf_detuning_rad_s: d.delta_l,
            doppler_nodes: p.node_count,
            doppler_truncation: p.truncation,
        }
    }
}

impl AtomSection {
    pub fn physics(&self) -> Physics {
        Physics {
            scheme: LevelScheme {
                gamma2: self.gamma2_rad_s,
                gamma3: self.gamma3_rad_s,
                gamma4: self.gamma4_rad_s,
                mu12: self.mu12_c_m,
                mu34: self.mu34_c_m,
                lambda_p: self.probe_wavelength_m,
                lambda_c: self.coupling_wavelength_m,
                n0: self.density_m3,
                mass: self.mass_kg,
                t_env: self.temperature_k,
            },
            drive: DriveParams {
                omega_p: self.probe_rabi_rad_s,
                omega_c: self.coupling_rabi_rad_s,
                delta_p: self.probe_detuning_rad_s,
                delta_c: self.coupling_detuning_rad_s,
                delta_l: self.rf_detuning_rad_s,
                omega_rf: Complex64::new(0.0, 0.0),
            },
            spec: DopplerSpec { node_count: self.doppler_nodes, truncation: self.doppler_truncation },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApertureSection {
    pub length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_samples: Option<usize>,
    #[serde(default = "default_probe_power")]
    pub probe_input_power_w: f64,
}

fn default_probe_power() -> f64 {
    1.5e-3
}

/// LO tone. Amplitude is given either as a Rabi frequency or as a power in
/// dBm relative to `comms.reference_lo_rabi_rad_s` at 6 dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoSection {
    pub freq_hz: f64,
    pub angle_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default)]
    pub band: usize,
    #[serde(default = "one")]
    pub coupling_scale: f64,
    #[serde(default = "default_pattern_if")]
    pub if_hz: f64,
}

fn one() -> f64 {
    1.0
}

fn default_pattern_if() -> f64 {
    5e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    #[default]
    User,
    Interferer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    #[serde(default)]
    pub kind: SignalKind,
    pub freq_hz: f64,
    pub angle_deg: f64,
    pub rabi_rad_s: f64,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default)]
    pub band: usize,
    pub if_hz: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_symbol_rate")]
    pub symbol_rate_sym_s: f64,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    #[serde(default = "one")]
    pub tx_power_scale: f64,
    #[serde(default = "default_interferer_bw")]
    pub bandwidth_hz: f64,
}

fn default_order() -> usize {
    16
}
fn default_symbol_rate() -> f64 {
    4e3
}
fn default_rolloff() -> f64 {
    0.35
}
fn default_interferer_bw() -> f64 {
    8e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModelKey {
    Linearized,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommsSection {
    pub sample_rate_hz: f64,
    /// Symbol SNR of a unit-gain first user.
    pub es_n0_db: f64,
    /// One-sided noise PSD; overrides `es_n0_db` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_density: Option<f64>,
    pub seed: u64,
    pub model: ChannelModelKey,
    /// LO Rabi frequency at 6 dBm.
    pub reference_lo_rabi_rad_s: f64,
    /// Payload bits per user when a signal omits `bits`.
    pub bits: usize,
}

impl Default for CommsSection {
    fn default() -> Self {
        Self {
            sample_rate_hz: 160e3,
            es_n0_db: 20.0,
            noise_density: None,
            seed: 1,
            model: ChannelModelKey::Linearized,
            reference_lo_rabi_rad_s: REFERENCE_LO_RABI,
            bits: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multipeak,
    Multiband,
    Interference,
    Multiuser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub delta_c_start_rad_s: f64,
    pub delta_c_stop_rad_s: f64,
    pub delta_c_points: usize,
    /// RF Rabi frequency of the spectrum sweep.
    pub rf_rabi_rad_s: f64,
    pub lengths_m: Vec<f64>,
    pub sirs_db: Vec<f64>,
    /// LO powers per step (dBm, `-inf` switches an LO off).
    pub lo_schedule_dbm: Vec<Vec<f64>>,
    /// Per-step offset of each user from its configured direction.
    pub offsets_deg: Vec<Vec<f64>>,
    pub fit_grid_points: usize,
    pub fit_budget: usize,
    pub fit_tolerance: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        let fit = qaperture::estimation::PhaseFitOptions::default();
        Self {
            mode: None,
            theta_start_deg: 0.0,
            theta_stop_deg: 180.0,
            theta_step_deg: 1.0,
            delta_c_start_rad_s: -2.0 * PI * 40e6,
            delta_c_stop_rad_s: 2.0 * PI * 40e6,
            delta_c_points: 201,
            rf_rabi_rad_s: 2.0 * PI * 20e6,
            lengths_m: vec![0.04, 0.05, 0.06, 0.10],
            sirs_db: vec![-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0],
            lo_schedule_dbm: Vec::new(),
            offsets_deg: Vec::new(),
            fit_grid_points: fit.grid_points,
            fit_budget: fit.budget,
            fit_tolerance: fit.tolerance,
        }
    }
}

pub const PRESETS: [&str; 7] = ["single", "multipeak", "multiband", "spectrum", "interference", "multiuser", "multiband-link"];

fn lo(freq_hz: f64, angle_deg: f64, band: usize, if_hz: f64) -> LoSection {
    LoSection {
        freq_hz,
        angle_deg,
        rabi_rad_s: None,
        power_dbm: Some(REFERENCE_LO_DBM),
        phase_rad: 0.0,
        band,
        coupling_scale: 1.0,
        if_hz,
    }
}

fn signal(kind: SignalKind, freq_hz: f64, angle_deg: f64, band: usize, if_hz: f64) -> SignalSection {
    SignalSection {
        kind,
        freq_hz,
        angle_deg,
        rabi_rad_s: 0.01 * REFERENCE_LO_RABI,
        phase_rad: 0.0,
        band,
        if_hz,
        order: 16,
        symbol_rate_sym_s: 4e3,
        rolloff: 0.35,
        bits: None,
        tx_power_scale: 1.0,
        bandwidth_hz: 8e3,
    }
}

impl ConfigDocument {
    fn empty() -> Self {
        Self {
            atom: AtomSection::default(),
            aperture: None,
            lo: Vec::new(),
            signals: Vec::new(),
            comms: CommsSection::default(),
            run: RunSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize configuration: {e}")))
    }

    /// The paper's experimental setups. Angle grids run 20–160° in 2° steps.
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let mut c = Self::empty();
        c.run.theta_start_deg = 20.0;
        c.run.theta_stop_deg = 160.0;
        c.run.theta_step_deg = 2.0;
        let aperture = |length_m| Some(ApertureSection { length_m, spatial_samples: None, probe_input_power_w: 1.5e-3 });
        match name {
            "single" => {
                c.aperture = aperture(0.08);
                c.lo = vec![lo(KU_BAND_HZ, 270.0, 0, 5e3)];
                c.run.mode = Some(Mode::Single);
            }
            "multipeak" => {
                c.aperture = aperture(0.08);
                c.lo = vec![lo(KU_BAND_HZ, 240.0, 0, 5e3), lo(KU_BAND_HZ, 300.0, 0, 5e3)];
                c.run.mode = Some(Mode::Multipeak);
            }
            "multiband" => {
                c.aperture = aperture(0.08);
                c.lo = vec![lo(S_BAND_HZ, 300.0, 0, 24e3), lo(KU_BAND_HZ, 240.0, 1, 33e3)];
                c.run.mode = Some(Mode::Multiband);
            }
            "spectrum" => {}
            "interference" => {
                c.aperture = aperture(0.04);
                c.lo = vec![lo(KU_BAND_HZ, 300.0, 0, 28e3)];
                c.signals = vec![
                    signal(SignalKind::User, KU_BAND_HZ, 60.0, 0, 28e3),
                    signal(SignalKind::Interferer, KU_BAND_HZ, 75.0, 0, 28e3),
                ];
                c.run.mode = Some(Mode::Interference);
            }
            "multiuser" => {
                c.aperture = aperture(0.08);
                c.lo = vec![lo(KU_BAND_HZ, 300.0, 0, 24e3), lo(KU_BAND_HZ, 240.0, 0, 33e3)];
                c.signals = vec![
                    signal(SignalKind::User, KU_BAND_HZ, 60.0, 0, 24e3),
                    signal(SignalKind::User, KU_BAND_HZ, 120.0, 0, 33e3),
                ];
                c.comms.reference_lo_rabi_rad_s = MULTIUSER_LO_RABI;
                c.run.mode = Some(Mode::Multiuser);
                c.run.lo_schedule_dbm = (0..5).map(|i| vec![6.0 + i as f64, 6.0 - i as f64]).collect();
            }
            "multiband-link" => {
                c.aperture = aperture(0.08);
                c.lo = vec![lo(S_BAND_HZ, 300.0, 0, 24e3), lo(KU_BAND_HZ, 270.0, 1, 33e3)];
                c.signals = vec![
                    signal(SignalKind::User, S_BAND_HZ, 60.0, 0, 24e3),
                    signal(SignalKind::User, KU_BAND_HZ, 90.0, 1, 33e3),
                ];
                c.run.mode = Some(Mode::Multiband);
                c.run.offsets_deg = (0..5).map(|i| vec![10.0 * i as f64, 2.5 * i as f64]).collect();
            }
            other => {
                return Err(CliError::Config(format!("unknown preset `{other}` (expected one of {})", PRESETS.join(", "))))
            }
        }
        Ok(c)
    }

    pub fn aperture(&self) -> Result<&ApertureSection, CliError> {
        self.aperture.as_ref().ok_or_else(|| CliError::Config("missing section `aperture` (key `length_m`)".into()))
    }

    pub fn lo_tones(&self) -> Result<Vec<RfTone>, CliError> {
        if self.lo.is_empty() {
            return Err(CliError::Config("configuration needs at least one `[[lo]]` tone".into()));
        }
        self.lo
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let rabi = match (l.rabi_rad_s, l.power_dbm) {
                    (Some(r), None) => r,
                    (None, Some(p)) => qaperture::comms::lo_rabi_from_dbm(p, self.comms.reference_lo_rabi_rad_s),
                    _ => return Err(CliError::Config(format!("lo[{i}]: give exactly one of `rabi_rad_s` or `power_dbm`"))),
                };
                Ok(RfTone { rabi, ..RfTone::new(1.0, l.freq_hz, l.angle_deg, l.phase_rad).in_band(l.band) })
            })
            .collect()
    }

    pub fn lo_config(&self) -> Result<LoConfiguration, CliError> {
        Ok(LoConfiguration::new(self.lo_tones()?))
    }

    pub fn bands(&self) -> Result<Vec<(BandConfig, RfTone)>, CliError> {
        let tones = self.lo_tones()?;
        Ok(self
            .lo
            .iter()
            .zip(tones)
            .map(|(l, t)| {
                let band = BandConfig {
                    band_index: l.band,
                    wavelength: t.wavelength(),
                    coupling_scale: l.coupling_scale,
                    if_frequency: 2.0 * PI * l.if_hz,
                };
                (band, t)
            })
            .collect())
    }

    /// Geometry whose default node count resolves the shortest LO wavelength.
    pub fn geometry(&self) -> Result<ApertureGeometry, CliError> {
        let a = self.aperture()?;
        let lambda_min = self.lo_tones()?.iter().map(|t| t.wavelength()).fold(f64::INFINITY, f64::min);
        let k_p = 2.0 * PI / self.atom.probe_wavelength_m;
        Ok(ApertureGeometry {
            length: a.length_m,
            spatial_samples: a.spatial_samples.unwrap_or_else(|| default_spatial_samples(a.length_m, lambda_min)),
            probe_input_power: a.probe_input_power_w,
            probe_wavenumber: k_p,
        })
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>, CliError> {
        let r = &self.run;
        if !(r.theta_step_deg > 0.0 && r.theta_stop_deg > r.theta_start_deg) {
            return Err(CliError::Config(format!(
                "run.theta_* must satisfy start < stop and step > 0 (got {}, {}, {})",
                r.theta_start_deg, r.theta_stop_deg, r.theta_step_deg
            )));
        }
        Ok(qaperture::aperture::angle_grid(r.theta_start_deg, r.theta_stop_deg, r.theta_step_deg))
    }

    /// Link scenario: payloads are drawn from `comms.seed` in signal order,
    /// then the channel seed.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.comms.seed);
        let mut users = Vec::new();
        let mut interferers = Vec::new();
        for s in &self.signals {
            let tone = RfTone { rabi: s.rabi_rad_s, ..RfTone::new(1.0, s.freq_hz, s.angle_deg, s.phase_rad).in_band(s.band) };
            match s.kind {
                SignalKind::User => {
                    let mut stream = QamStream::random(s.order, s.symbol_rate_sym_s, s.if_hz, s.bits.unwrap_or(self.comms.bits), &mut rng);
                    stream.rolloff = s.rolloff;
                    stream.tx_power_scale = s.tx_power_scale;
                    users.push(User { tone, stream });
                }
                SignalKind::Interferer => interferers.push(Interferer { tone, bandwidth_hz: s.bandwidth_hz, if_freq: s.if_hz }),
            }
        }
        let first = users.first().ok_or_else(|| CliError::Config("link runs need at least one user signal".into()))?;
        let noise_density = self
            .comms
            .noise_density
            .unwrap_or_else(|| noise_density_for(first.tone.rabi, first.stream.symbol_rate, self.comms.es_n0_db));
        Ok(Scenario {
            geometry: self.geometry()?,
            lo_config: self.lo_config()?,
            users,
            interferers,
            noise_density,
            sample_rate: self.comms.sample_rate_hz,
            seed: rng.next_u64(),
            model: match self.comms.model {
                ChannelModelKey::Linearized => WaveformModel::Linearized,
                ChannelModelKey::Full => WaveformModel::Full,
            },
            physics: self.atom.physics(),
            reference_rabi: Some(self.comms.reference_lo_rabi_rad_s),
            sensitivity: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let c = ConfigDocument::preset(name).unwrap();
            let text = c.to_toml().unwrap();
            assert_eq!(ConfigDocument::parse(&text).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ConfigDocument::parse("[aperture]\nlength_m = 0.08\nwidth_m = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("width_m") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn missing_length_is_named() {
        let msg = ConfigDocument::parse("[aperture]\nspatial_samples = 201\n").unwrap_err().to_string();
        assert!(msg.contains("length_m"), "{msg}");
    }

    #[test]
    fn lo_amplitude_needs_exactly_one_form() {
        let mut c = ConfigDocument::preset("single").unwrap();
        c.lo[0].rabi_rad_s = Some(1.0);
        assert!(c.lo_tones().is_err());
        c.lo[0].power_dbm = None;
        assert_eq!(c.lo_tones().unwrap()[0].rabi, 1.0);
    }
}
