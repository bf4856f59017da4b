use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::FftPlanner;

use super::qam::{shape, QamStream, SRRC_SPAN_SYMBOLS};
use super::{invalid, CommsError, Result, Waveform};
use crate::aperture::{
    delta_p_full_modulated, ApertureGeometry, LinearizedResponse, LoConfiguration, MultipeakEvaluator, RfTone,
    SensitivityTable, WaveformModel,
};
use crate::numerics::sinc;
use crate::quantum::{DopplerSpec, DriveParams, LevelScheme};
use crate::Complex64;

/// A data-carrying signal: arrival geometry and amplitude from `tone`
/// (Rabi units), payload and IF from `stream`.
#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub tone: RfTone,
    pub stream: QamStream,
}

/// Band-limited Gaussian noise source arriving as a plane wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub tone: RfTone,
    /// Occupied bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Center of the received spectrum (Hz).
    pub if_freq: f64,
}

/// Atomic model used for gains and, in full mode, the waveform itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Physics {
    pub scheme: LevelScheme,
    pub drive: DriveParams,
    pub spec: DopplerSpec,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: ApertureGeometry,
    pub lo_config: LoConfiguration,
    pub users: Vec<User>,
    pub interferers: Vec<Interferer>,
    /// One-sided PSD of the additive white noise (Rabi units²/Hz).
    pub noise_density: f64,
    pub sample_rate: f64,
    pub seed: u64,
    pub model: WaveformModel,
    pub physics: Physics,
    /// LO Rabi frequency whose single-LO response defines unit gain in
    /// multi-LO bands. Defaults to the band's strongest LO.
    pub reference_rabi: Option<f64>,
    /// Sensitivity table reused by multi-LO gain evaluations.
    pub sensitivity: Option<Arc<SensitivityTable>>,
}

/// White-noise density giving symbol SNR `es_n0_db` for a unit-gain user of
/// Rabi amplitude `rabi`.
pub fn noise_density_for(rabi: f64, symbol_rate: f64, es_n0_db: f64) -> f64 {
    rabi * rabi / (2.0 * symbol_rate) * 10f64.powf(-es_n0_db / 10.0)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.lo_config.validate()?;
        if self.users.is_empty() {
            return invalid("scenario needs at least one user");
        }
        let coincident = self.lo_config.coincident;
        for (i, u) in self.users.iter().enumerate() {
            u.stream.validate()?;
            u.tone.validate_sig(coincident)?;
            self.band_of(&u.tone)?;
            u.stream.samples_per_symbol(self.sample_rate)?;
            if self.users[..i].iter().any(|v| v.stream.if_freq == u.stream.if_freq) {
                return invalid(format!("duplicate user IF {} Hz", u.stream.if_freq));
            }
        }
        for i in &self.interferers {
            i.tone.validate_sig(coincident)?;
            self.band_of(&i.tone)?;
            if !(i.bandwidth_hz > 0.0 && i.bandwidth_hz < self.sample_rate / 2.0) {
                return invalid(format!("interferer bandwidth {} Hz out of range", i.bandwidth_hz));
            }
            if !(i.if_freq >= 0.0 && i.if_freq.is_finite()) {
                return invalid("interferer IF must be non-negative");
            }
        }
        if !(self.noise_density >= 0.0 && self.noise_density.is_finite()) {
            return invalid("noise density must be non-negative");
        }
        if let Some(r) = self.reference_rabi {
            if !(r > 0.0 && r.is_finite()) {
                return invalid("reference Rabi frequency must be positive");
            }
        }
        let required = self.required_sample_rate();
        if self.sample_rate <= required {
            return Err(CommsError::AliasingRisk { sample_rate: self.sample_rate, required });
        }
        if self.model == WaveformModel::Full && (!self.lo_config.is_single_band() || self.lo_config.tones.len() != 1) {
            return invalid("the full channel model supports a single LO tone");
        }
        Ok(())
    }

    /// `4·max IF + 2·max signal bandwidth`.
    pub fn required_sample_rate(&self) -> f64 {
        let ifs = self.users.iter().map(|u| u.stream.if_freq).chain(self.interferers.iter().map(|i| i.if_freq));
        let bws = self.users.iter().map(|u| u.stream.bandwidth()).chain(self.interferers.iter().map(|i| i.bandwidth_hz));
        4.0 * ifs.fold(0.0, f64::max) + 2.0 * bws.fold(0.0, f64::max)
    }

    /// Samples per block: long enough for every user's burst plus guard, and a
    /// whole number of symbols for every user.
    pub fn sample_count(&self) -> Result<usize> {
        let mut len = 0usize;
        let mut step = 1usize;
        for u in &self.users {
            let sps = u.stream.samples_per_symbol(self.sample_rate)?;
            len = len.max((u.stream.symbol_count() + SRRC_SPAN_SYMBOLS) * sps);
            step = lcm(step, sps);
        }
        Ok(len.div_ceil(step) * step)
    }

    pub fn duration(&self) -> Result<f64> {
        Ok(self.sample_count()? as f64 / self.sample_rate)
    }

    fn band_of(&self, tone: &RfTone) -> Result<Vec<RfTone>> {
        self.lo_config
            .bands()
            .into_iter()
            .find(|(b, _)| *b == tone.band_index)
            .map(|(_, tones)| tones)
            .ok_or_else(|| CommsError::InvalidParameter(format!("no LO in band {}", tone.band_index)))
    }

    /// Complex amplitude gain of the aperture toward `tone`, including the
    /// tone's own phase. Unit magnitude at the peak of a single-LO band.
    pub fn gain(&self, tone: &RfTone) -> Result<Complex64> {
        let los = self.band_of(tone)?;
        let own = Complex64::from_polar(1.0, tone.phase);
        if let [lo] = los.as_slice() {
            let x = self.geometry.length / lo.wavelength() * (tone.cos_direction() - lo.cos_direction());
            return Ok(own * Complex64::from_polar(sinc(x), PI * x - lo.phase));
        }
        let config = LoConfiguration { tones: los.clone(), coincident: self.lo_config.coincident };
        let total: f64 = los.iter().map(|t| t.rabi).sum();
        let table = match &self.sensitivity {
            Some(t) if t.check_covers(total).is_ok() => t.as_ref().clone(),
            _ => SensitivityTable::build(&self.physics.scheme, &self.physics.drive, &self.physics.spec, total)?,
        };
        let reference = self.reference_rabi.unwrap_or_else(|| config.max_rabi());
        let unit = table.eval(reference) * self.geometry.length;
        let evaluator = MultipeakEvaluator::new(&self.geometry, los[0].wavenumber(), table, &[tone.direction_deg])?;
        let (response, _) = evaluator.response(&config)?;
        Ok(own * response[0] / unit)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Unit-power complex Gaussian noise confined to `|f| ≤ bandwidth/2`.
fn band_limited_noise(len: usize, sample_rate: f64, bandwidth: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut x);
    for (k, v) in x.iter_mut().enumerate() {
        let k = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
        if (k * sample_rate / len as f64).abs() > bandwidth / 2.0 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut x);
    let power = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64;
    let scale = if power > 0.0 { power.sqrt().recip() } else { 0.0 };
    x.iter_mut().for_each(|v| *v *= scale);
    x
}

/// Complex envelopes (before IF) of every user then every interferer.
fn envelopes(scenario: &Scenario, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<Complex64>>> {
    let mut out = Vec::with_capacity(scenario.users.len() + scenario.interferers.len());
    for u in &scenario.users {
        let sps = u.stream.samples_per_symbol(scenario.sample_rate)?;
        let amp = u.tone.rabi * u.stream.tx_power_scale.sqrt();
        let mut a = shape(&u.stream.symbols(), sps, u.stream.rolloff, len / sps);
        a.iter_mut().for_each(|v| *v *= amp);
        out.push(a);
    }
    for i in &scenario.interferers {
        let mut b = band_limited_noise(len, scenario.sample_rate, i.bandwidth_hz, rng);
        b.iter_mut().for_each(|v| *v *= i.tone.rabi);
        out.push(b);
    }
    Ok(out)
}

fn emitter_ifs(scenario: &Scenario) -> Vec<f64> {
    scenario.users.iter().map(|u| u.stream.if_freq).chain(scenario.interferers.iter().map(|i| i.if_freq)).collect()
}

fn emitter_tones(scenario: &Scenario) -> Vec<RfTone> {
    scenario.users.iter().map(|u| u.tone).chain(scenario.interferers.iter().map(|i| i.tone)).collect()
}

/// Received probe-power AC waveform in Rabi units: every emitter enters as
/// `Re{g·Ω·e(t)·e^{jω_IF t}}` with its complex aperture gain `g`, plus white
/// Gaussian noise. The full model replaces the linear sum by the exact
/// spatial integral, normalized by `−P̄·k_p·S·L` of the LO operating point.
pub fn channel_apply(scenario: &Scenario) -> Result<Waveform> {
    scenario.validate()?;
    let len = scenario.sample_count()?;
    let fs = scenario.sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let env = envelopes(scenario, len, &mut rng)?;
    let ifs = emitter_ifs(scenario);
    let tones = emitter_tones(scenario);

    let mut samples = match scenario.model {
        WaveformModel::Linearized => {
            let mut out = vec![0.0; len];
            for ((e, f), tone) in env.iter().zip(&ifs).zip(&tones) {
                let g = scenario.gain(tone)?;
                let w = 2.0 * PI * f / fs;
                for (n, (o, v)) in out.iter_mut().zip(e).enumerate() {
                    *o += (g * v * Complex64::from_polar(1.0, w * n as f64)).re;
                }
            }
            out
        }
        WaveformModel::Full => full_samples(scenario, &env, &ifs, &tones, len)?,
    };

    if scenario.noise_density > 0.0 {
        let sigma = (scenario.noise_density * fs / 2.0).sqrt();
        let normal = Normal::new(0.0, sigma).map_err(|e| CommsError::InvalidParameter(e.to_string()))?;
        samples.iter_mut().for_each(|s| *s += normal.sample(&mut rng));
    }
    Ok(Waveform { sample_rate: fs, samples })
}

fn full_samples(scenario: &Scenario, env: &[Vec<Complex64>], ifs: &[f64], tones: &[RfTone], len: usize) -> Result<Vec<f64>> {
    let lo = scenario.lo_config.tones[0];
    let p = &scenario.physics;
    let fs = scenario.sample_rate;
    let sigs: Vec<RfTone> = tones
        .iter()
        .zip(ifs)
        .map(|(t, f)| RfTone { rabi: 1.0, omega: lo.omega + 2.0 * PI * f, ..*t })
        .collect();
    let times: Vec<f64> = (0..len).map(|n| n as f64 / fs).collect();
    let power = delta_p_full_modulated(&scenario.geometry, &scenario.lo_config, &sigs, env, &p.scheme, &p.drive, &p.spec, &times)?;
    let op = LinearizedResponse::at(&scenario.geometry, &lo, &p.scheme, &p.drive, &p.spec)?;
    let scale = -op.dc_power * scenario.geometry.probe_wavenumber * op.sensitivity * scenario.geometry.length;
    let mean = power.iter().sum::<f64>() / len as f64;
    Ok(power.iter().map(|v| (v - mean) / scale).collect())
}
