use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{channel_apply, noise_density_for, Interferer, Physics, Scenario, User};
use super::metrics::{evaluate_user, LinkMetrics};
use super::qam::QamStream;
use super::{invalid, Result};
use crate::aperture::{format_significant, ApertureGeometry, LoConfiguration, RfTone, SensitivityTable, WaveformModel};
use crate::quantum::LevelScheme;

pub const KU_BAND_HZ: f64 = 15.59e9;
pub const S_BAND_HZ: f64 = 3.39e9;
/// Single-LO Rabi frequency of the presets.
pub const REFERENCE_LO_RABI: f64 = 2.0 * std::f64::consts::PI * 10e6;
/// LO Rabi frequency at `REFERENCE_LO_DBM` in multi-LO presets.
pub const MULTIUSER_LO_RABI: f64 = 2.0 * std::f64::consts::PI * 5e6;
pub const REFERENCE_LO_DBM: f64 = 6.0;
pub const DEFAULT_SAMPLE_RATE: f64 = 160e3;
pub const DEFAULT_SYMBOL_RATE: f64 = 4e3;
/// Symbol SNR of a unit-gain user under the default noise floor.
pub const DEFAULT_ES_N0_DB: f64 = 20.0;
pub const DEFAULT_BITS_PER_CELL: usize = 100_000;

/// LO Rabi frequency for a transmit power in dBm, given the Rabi frequency
/// at `REFERENCE_LO_DBM`.
pub fn lo_rabi_from_dbm(dbm: f64, reference_rabi: f64) -> f64 {
    reference_rabi * 10f64.powf((dbm - REFERENCE_LO_DBM) / 20.0)
}

/// Default user Rabi frequency, one percent of the reference LO.
pub fn default_user_rabi() -> f64 {
    0.01 * REFERENCE_LO_RABI
}

fn geometry(length: f64, lambda_min: f64) -> ApertureGeometry {
    ApertureGeometry::new(length, lambda_min, LevelScheme::default().k_probe())
}

fn wavelength(freq_hz: f64) -> f64 {
    crate::consts::SPEED_OF_LIGHT / freq_hz
}

fn user(freq_hz: f64, direction: f64, band: usize, if_freq: f64, n_bits: usize, rng: &mut ChaCha8Rng) -> User {
    User {
        tone: RfTone::new(default_user_rabi(), freq_hz, direction, 0.0).in_band(band),
        stream: QamStream::random(16, DEFAULT_SYMBOL_RATE, if_freq, n_bits, rng),
    }
}

fn base(geometry: ApertureGeometry, lo_config: LoConfiguration, users: Vec<User>, seed: u64) -> Scenario {
    Scenario {
        geometry,
        lo_config,
        users,
        interferers: Vec::new(),
        noise_density: noise_density_for(default_user_rabi(), DEFAULT_SYMBOL_RATE, DEFAULT_ES_N0_DB),
        sample_rate: DEFAULT_SAMPLE_RATE,
        seed,
        model: WaveformModel::Linearized,
        physics: Physics::default(),
        reference_rabi: None,
        sensitivity: None,
    }
}

/// Ku-band user at 60° (LO at 300°) and an 8 kHz interferer at 75°, both at a
/// 28 kHz IF, with equal transmit amplitudes.
pub fn interference_preset(length: f64, n_bits: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = RfTone::new(REFERENCE_LO_RABI, KU_BAND_HZ, 300.0, 0.0);
    let mut s = base(
        geometry(length, wavelength(KU_BAND_HZ)),
        LoConfiguration::single(lo),
        vec![user(KU_BAND_HZ, 60.0, 0, 28e3, n_bits, &mut rng)],
        rng.next_u64(),
    );
    s.interferers.push(Interferer {
        tone: RfTone::new(default_user_rabi(), KU_BAND_HZ, 75.0, 0.0),
        bandwidth_hz: 8e3,
        if_freq: 28e3,
    });
    s
}

/// Two Ku-band LOs at 300° and 240° (6 dBm each, `MULTIUSER_LO_RABI`) on an 8 cm cell, serving
/// UE1 at 60° (24 kHz IF) and UE2 at 120° (33 kHz IF).
pub fn multiuser_preset(n_bits: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = LoConfiguration::new(vec![
        RfTone::new(MULTIUSER_LO_RABI, KU_BAND_HZ, 300.0, 0.0),
        RfTone::new(MULTIUSER_LO_RABI, KU_BAND_HZ, 240.0, 0.0),
    ]);
    let users = vec![
        user(KU_BAND_HZ, 60.0, 0, 24e3, n_bits, &mut rng),
        user(KU_BAND_HZ, 120.0, 0, 33e3, n_bits, &mut rng),
    ];
    let mut s = base(geometry(0.08, wavelength(KU_BAND_HZ)), los, users, rng.next_u64());
    s.reference_rabi = Some(MULTIUSER_LO_RABI);
    s
}

/// S-band LO at 300° (band 0) and Ku-band LO at 270° (band 1) on an 8 cm
/// cell, with an S-band user at 60° (24 kHz IF) and a Ku-band user at 90°
/// (33 kHz IF).
pub fn multiband_preset(n_bits: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = LoConfiguration::new(vec![
        RfTone::new(REFERENCE_LO_RABI, S_BAND_HZ, 300.0, 0.0),
        RfTone::new(REFERENCE_LO_RABI, KU_BAND_HZ, 270.0, 0.0).in_band(1),
    ]);
    let users = vec![
        user(S_BAND_HZ, 60.0, 0, 24e3, n_bits, &mut rng),
        user(KU_BAND_HZ, 90.0, 1, 33e3, n_bits, &mut rng),
    ];
    base(geometry(0.08, wavelength(KU_BAND_HZ)), los, users, rng.next_u64())
}

/// One cell of an interference sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceRow {
    pub cell_len_m: f64,
    pub sir_db: f64,
    pub metrics: LinkMetrics,
}

/// Link metrics over a (length × SIR) grid. Every cell reuses the payload,
/// interferer and noise streams drawn from the base seed, so cells differ
/// only in geometry and interferer amplitude.
pub fn run_interference_sweep(base: &Scenario, lengths: &[f64], sirs_db: &[f64]) -> Result<Vec<InterferenceRow>> {
    if base.users.len() != 1 || base.interferers.len() != 1 {
        return invalid("interference sweep needs exactly one user and one interferer");
    }
    base.validate()?;
    let user = &base.users[0];
    let user_amp = user.tone.rabi * user.stream.tx_power_scale.sqrt();
    let lambda_min = base.lo_config.tones.iter().map(|t| t.wavelength()).fold(f64::INFINITY, f64::min);
    let cells: Vec<(f64, f64)> = lengths.iter().flat_map(|l| sirs_db.iter().map(move |s| (*l, *s))).collect();
    cells
        .par_iter()
        .map(|&(length, sir)| {
            let mut s = base.clone();
            s.geometry = ApertureGeometry { length, ..base.geometry };
            s.geometry.spatial_samples = crate::aperture::default_spatial_samples(length, lambda_min);
            if s.interferers[0].tone.rabi > 0.0 {
                s.interferers[0].tone.rabi = user_amp * 10f64.powf(-sir / 20.0);
            }
            let waveform = channel_apply(&s)?;
            Ok(InterferenceRow { cell_len_m: length, sir_db: sir, metrics: evaluate_user(&s, &waveform, 0)? })
        })
        .collect()
}

/// One step of a multiuser LO power schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiuserRow {
    pub step: usize,
    pub lo_dbm: Vec<f64>,
    /// Per user, in scenario order.
    pub metrics: Vec<LinkMetrics>,
}

/// Link metrics of every user at each LO power step (dBm per LO, in
/// `lo_config` order). The base's `reference_rabi` sets the Rabi frequency at
/// `REFERENCE_LO_DBM`. An LO power of `None` switches that LO off.
pub fn run_multiuser(base: &Scenario, schedule: &[Vec<Option<f64>>]) -> Result<Vec<MultiuserRow>> {
    if !base.lo_config.is_single_band() || base.lo_config.tones.len() < 2 {
        return invalid("multiuser runs need at least two LOs in one band");
    }
    base.validate()?;
    if schedule.iter().any(|step| step.len() != base.lo_config.tones.len()) {
        return invalid("each schedule step needs one power per LO");
    }
    let reference = base.reference_rabi.unwrap_or(REFERENCE_LO_RABI);
    let rabi = |p: &Option<f64>| p.map_or(0.0, |dbm| lo_rabi_from_dbm(dbm, reference));
    let total = schedule.iter().map(|step| step.iter().map(rabi).sum::<f64>()).fold(0.0, f64::max);
    let table = match &base.sensitivity {
        Some(t) if t.check_covers(total).is_ok() => t.clone(),
        _ => {
            let p = &base.physics;
            Arc::new(SensitivityTable::build(&p.scheme, &p.drive, &p.spec, total)?)
        }
    };
    schedule
        .par_iter()
        .enumerate()
        .map(|(step, powers)| {
            let mut s = base.clone();
            s.sensitivity = Some(table.clone());
            s.reference_rabi = Some(reference);
            for (tone, p) in s.lo_config.tones.iter_mut().zip(powers) {
                tone.rabi = rabi(p);
            }
            let waveform = channel_apply(&s)?;
            let metrics = (0..s.users.len()).map(|u| evaluate_user(&s, &waveform, u)).collect::<Result<_>>()?;
            Ok(MultiuserRow { step, lo_dbm: powers.iter().map(|p| p.unwrap_or(f64::NEG_INFINITY)).collect(), metrics })
        })
        .collect()
}

/// Paired misalignment step of a multiband run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibandRow {
    pub step: usize,
    /// Offset of each user from its aligned direction (degrees).
    pub offsets_deg: Vec<f64>,
    pub metrics: Vec<LinkMetrics>,
}

/// Moves user `u` by `offsets[step][u]` degrees from its base direction at
/// each step and scores every user.
pub fn run_multiband(base: &Scenario, offsets: &[Vec<f64>]) -> Result<Vec<MultibandRow>> {
    base.validate()?;
    if offsets.iter().any(|o| o.len() != base.users.len()) {
        return invalid("each misalignment step needs one offset per user");
    }
    offsets
        .par_iter()
        .enumerate()
        .map(|(step, offs)| {
            let mut s = base.clone();
            for (u, o) in s.users.iter_mut().zip(offs) {
                u.tone.direction_deg += o;
            }
            let waveform = channel_apply(&s)?;
            let metrics = (0..s.users.len()).map(|u| evaluate_user(&s, &waveform, u)).collect::<Result<_>>()?;
            Ok(MultibandRow { step, offsets_deg: offs.clone(), metrics })
        })
        .collect()
}

fn num(x: f64) -> String {
    format_significant(x, 9)
}

fn metric_fields(m: &LinkMetrics) -> String {
    format!("{},{},{},{}", num(m.evm_pct), num(m.ber), num(m.rx_psd_db), num(m.sir_eff_db))
}

pub fn interference_csv(rows: &[InterferenceRow]) -> String {
    let mut out = String::from("cell_len_m,sir_db,evm_pct,ber,rx_psd_db,sir_eff_db\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", num(r.cell_len_m), num(r.sir_db), metric_fields(&r.metrics)));
    }
    out
}

pub fn multiuser_csv(rows: &[MultiuserRow]) -> String {
    let mut out = String::from("step,user,lo1_dbm,lo2_dbm,evm_pct,ber,rx_psd_db,sir_eff_db,locked\n");
    for r in rows {
        let lo = |i: usize| r.lo_dbm.get(i).map_or_else(String::new, |v| num(*v));
        for (u, m) in r.metrics.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.step, u + 1, lo(0), lo(1), metric_fields(m), m.locked));
        }
    }
    out
}

pub fn multiband_csv(rows: &[MultibandRow]) -> String {
    let mut out = String::from("step,user,offset_deg,evm_pct,ber,rx_psd_db,sir_eff_db,locked\n");
    for r in rows {
        for (u, m) in r.metrics.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", r.step, u + 1, num(r.offsets_deg[u]), metric_fields(m), m.locked));
        }
    }
    out
}
