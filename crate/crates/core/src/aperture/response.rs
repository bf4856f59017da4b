use std::cell::Cell;

use super::{invalid, ApertureError, ApertureGeometry, BandConfig, LoConfiguration, Result, RfTone};
use crate::comms::Waveform;
use crate::numerics::{simpson_weights, sinc, tone_phasor, Chebyshev};
use crate::quantum::{absorption, sensitivity, DopplerSpec, DriveParams, LevelScheme, DEFAULT_SENSITIVITY_STEP};
use crate::Complex64;

/// Largest signal/LO Rabi ratio accepted by the linearized model.
const MAX_WEAK_RATIO: f64 = 0.1;

/// LO-only operating point of a uniform single-LO cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedResponse {
    /// `P̄ = P_in·exp(−k_p·L·Im[χ₀])` (W).
    pub dc_power: f64,
    /// `∂Im[χ]/∂Ω_l` at the LO amplitude (s/rad).
    pub sensitivity: f64,
    /// LO Rabi frequency (rad/s).
    pub omega_l: f64,
}

impl LinearizedResponse {
    pub fn at(
        geometry: &ApertureGeometry,
        lo: &RfTone,
        scheme: &LevelScheme,
        drive: &DriveParams,
        spec: &DopplerSpec,
    ) -> Result<Self> {
        geometry.validate()?;
        let d = drive.with_lo(lo.rabi);
        let chi0 = absorption(scheme, &d, spec)?;
        let s = sensitivity(scheme, &d, spec, DEFAULT_SENSITIVITY_STEP)?;
        Ok(Self {
            dc_power: geometry.probe_input_power * (-geometry.probe_wavenumber * geometry.length * chi0).exp(),
            sensitivity: s,
            omega_l: lo.rabi,
        })
    }

    /// Peak amplitude of the IF line produced by `sig` (W).
    pub fn if_amplitude(&self, geometry: &ApertureGeometry, lo: &RfTone, sig: &RfTone, exact_k: bool) -> f64 {
        let (gain, _) = spatial_factor(geometry, lo, sig, exact_k);
        (self.dc_power * geometry.probe_wavenumber * self.sensitivity * sig.rabi * geometry.length * gain).abs()
    }
}

/// `(sinc(aL/2π), aL/2)` for the spatial phase slope `a` along y.
fn spatial_factor(geometry: &ApertureGeometry, lo: &RfTone, sig: &RfTone, exact_k: bool) -> (f64, f64) {
    let k_s = if exact_k { sig.wavenumber() } else { lo.wavenumber() };
    let a = k_s * sig.cos_direction() - lo.wavenumber() * lo.cos_direction();
    let x = a * geometry.length / (2.0 * std::f64::consts::PI);
    (sinc(x), 0.5 * a * geometry.length)
}

/// First-order probe-power variation produced by one weak signal:
/// `−P̄·k_p·S·Ω_s·L·sinc[L/λ_l(cos θ_s − cos θ_l)]·cos(ω_δ t + φ′_δ)`.
///
/// `φ′_δ = φ_s − φ_l + πL(cos θ_s − cos θ_l)/λ_l`. With `exact_k` the signal
/// keeps its own wavenumber instead of `k_s ≈ k_l`.
pub fn delta_p_linearized(
    geometry: &ApertureGeometry,
    lo: &RfTone,
    sig: &RfTone,
    response: &LinearizedResponse,
    t: f64,
    exact_k: bool,
) -> Result<f64> {
    let ratio = sig.rabi / lo.rabi;
    if !(ratio <= MAX_WEAK_RATIO) {
        return Err(ApertureError::WeakLoViolation { ratio });
    }
    let (gain, shift) = spatial_factor(geometry, lo, sig, exact_k);
    let phase = (sig.omega - lo.omega) * t + sig.phase - lo.phase + shift;
    Ok(-response.dc_power
        * geometry.probe_wavenumber
        * response.sensitivity
        * sig.rabi
        * geometry.length
        * gain
        * phase.cos())
}

/// Composite Rabi frequency at every spatial node for one instant, in the
/// frame rotating at the LO frequency. `scale[i]` multiplies signal `i`.
fn composite_fields(ys: &[f64], config: &LoConfiguration, sigs: &[RfTone], scale: &[Complex64], t: f64) -> Vec<Complex64> {
    let omega_l = config.tones[0].omega;
    ys.iter()
        .map(|y| {
            let sig: Complex64 = sigs
                .iter()
                .zip(scale)
                .map(|(s, c)| {
                    c * Complex64::from_polar(
                        s.rabi,
                        (s.omega - omega_l) * t + s.wavenumber() * y * s.cos_direction() + s.phase,
                    )
                })
                .sum();
            config.field_at(*y) + sig
        })
        .collect()
}

fn check_full_inputs(geometry: &ApertureGeometry, config: &LoConfiguration, sigs: &[RfTone]) -> Result<()> {
    geometry.validate()?;
    config.validate()?;
    if !config.is_single_band() {
        return invalid("the full model handles a single band");
    }
    for s in sigs {
        s.validate_sig(config.coincident)?;
    }
    Ok(())
}

/// Probe output power `P(t) = P_in·exp(−k_p ∫ Im[χ(y,t)] dy)` at each time.
///
/// `Im[χ]` depends on the composite Rabi frequency only through `|Ω|`, so one
/// Chebyshev table in `|Ω|` spanning every node and instant of this call
/// stands in for per-node steady-state solves.
pub fn delta_p_full_series(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    sigs: &[RfTone],
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    times: &[f64],
) -> Result<Vec<f64>> {
    let ones = vec![vec![Complex64::new(1.0, 0.0); times.len()]; sigs.len()];
    delta_p_full_modulated(geometry, config, sigs, &ones, scheme, drive, spec, times)
}

/// [`delta_p_full_series`] with signal `i` scaled by the complex envelope
/// `envelopes[i][n]` at `times[n]`.
#[allow(clippy::too_many_arguments)]
pub fn delta_p_full_modulated(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    sigs: &[RfTone],
    envelopes: &[Vec<Complex64>],
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_full_inputs(geometry, config, sigs)?;
    if envelopes.len() != sigs.len() || envelopes.iter().any(|e| e.len() != times.len()) {
        return invalid("need one envelope sample per signal and time");
    }
    let ys = geometry.positions();
    let weights = simpson_weights(ys.len(), geometry.length);
    let magnitudes = |n: usize| -> Vec<f64> {
        let scale: Vec<Complex64> = envelopes.iter().map(|e| e[n]).collect();
        composite_fields(&ys, config, sigs, &scale, times[n]).iter().map(|f| f.norm()).collect()
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in 0..times.len() {
        for m in magnitudes(n) {
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }

    let failing = Cell::new(0.0);
    let table = Chebyshev::fit(lo, hi, 1e-13, 256, |omega| {
        failing.set(omega);
        absorption(scheme, &drive.with_lo(omega), spec).map(|a| Complex64::new(a, 0.0))
    })
    .map_err(|source| {
        let target = failing.get();
        let first = magnitudes(0);
        let (i, _) = first
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .unwrap_or((0, &0.0));
        ApertureError::AtPosition { y: ys[i], source }
    })?;

    Ok((0..times.len())
        .map(|n| {
            let integral: f64 = magnitudes(n).iter().zip(&weights).map(|(o, w)| w * table.eval(*o).re).sum();
            geometry.probe_input_power * (-geometry.probe_wavenumber * integral).exp()
        })
        .collect())
}

/// [`delta_p_full_series`] at a single instant.
pub fn delta_p_full(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    sigs: &[RfTone],
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    t: f64,
) -> Result<f64> {
    Ok(delta_p_full_series(geometry, config, sigs, scheme, drive, spec, &[t])?[0])
}

/// Reference evaluation of `P(t)` with one Doppler-averaged solve per node.
pub fn delta_p_full_direct(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    sigs: &[RfTone],
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    t: f64,
) -> Result<f64> {
    check_full_inputs(geometry, config, sigs)?;
    let ys = geometry.positions();
    let weights = simpson_weights(ys.len(), geometry.length);
    let mut integral = 0.0;
    let ones = vec![Complex64::new(1.0, 0.0); sigs.len()];
    for ((y, w), field) in ys.iter().zip(&weights).zip(composite_fields(&ys, config, sigs, &ones, t)) {
        let chi = absorption(scheme, &drive.with_lo(field.norm()), spec)
            .map_err(|source| ApertureError::AtPosition { y: *y, source })?;
        integral += w * chi;
    }
    Ok(geometry.probe_input_power * (-geometry.probe_wavenumber * integral).exp())
}

/// IF-line amplitude of the full model for one signal, from eight samples
/// spanning one IF period.
pub fn if_amplitude_full(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    sig: &RfTone,
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
) -> Result<f64> {
    const K: usize = 8;
    let f_if = (sig.omega - config.tones[0].omega).abs() / (2.0 * std::f64::consts::PI);
    if f_if == 0.0 {
        return invalid("signal and LO share a frequency; no IF line");
    }
    let fs = K as f64 * f_if;
    let times: Vec<f64> = (0..K).map(|n| n as f64 / fs).collect();
    let p = delta_p_full_series(geometry, config, std::slice::from_ref(sig), scheme, drive, spec, &times)?;
    Ok(tone_phasor(&p, fs, f_if).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformModel {
    Linearized,
    Full,
}

/// Everything needed to sample `ΔP(t)`.
#[derive(Debug, Clone, Copy)]
pub struct WaveformRequest<'a> {
    pub geometry: &'a ApertureGeometry,
    pub config: &'a LoConfiguration,
    pub sigs: &'a [RfTone],
    /// Per-band coupling scales; bands without an entry use α = 1.
    pub bands: &'a [BandConfig],
    pub scheme: &'a LevelScheme,
    pub drive: &'a DriveParams,
    pub spec: &'a DopplerSpec,
    pub duration: f64,
    pub sample_rate: f64,
    pub model: WaveformModel,
}

/// Uniformly sampled `ΔP(t)` with the DC level removed.
pub fn synthesize_waveform(req: &WaveformRequest) -> Result<Waveform> {
    req.geometry.validate()?;
    req.config.validate()?;
    let bands = req.config.bands();
    let lo_of = |band: usize| -> Result<RfTone> {
        match bands.iter().find(|(b, _)| *b == band) {
            Some((_, tones)) => Ok(tones[0]),
            None => invalid(format!("signal in band {band} has no LO")),
        }
    };
    let mut ifs = Vec::with_capacity(req.sigs.len());
    for s in req.sigs {
        s.validate_sig(req.config.coincident)?;
        ifs.push(((s.omega - lo_of(s.band_index)?.omega) / (2.0 * std::f64::consts::PI)).abs());
    }
    let max_if = ifs.iter().cloned().fold(0.0, f64::max);
    if !(req.sample_rate > 4.0 * max_if) {
        return Err(ApertureError::AliasingRisk { sample_rate: req.sample_rate, max_if });
    }
    let min_if = ifs.iter().cloned().filter(|f| *f > 0.0).fold(f64::INFINITY, f64::min);
    if min_if.is_finite() && req.duration < 10.0 / min_if * (1.0 - 1e-9) {
        return Err(ApertureError::InsufficientDuration { duration: req.duration, required: 10.0 / min_if });
    }
    let n = (req.duration * req.sample_rate).round() as usize;
    let times: Vec<f64> = (0..n).map(|i| i as f64 / req.sample_rate).collect();

    let samples = match req.model {
        WaveformModel::Linearized => {
            let mut out = vec![0.0; n];
            for (band, tones) in &bands {
                if tones.len() != 1 {
                    return invalid("the linearized model needs exactly one LO per band");
                }
                let lo = tones[0];
                let alpha = req.bands.iter().find(|b| b.band_index == *band).map_or(1.0, |b| b.coupling_scale);
                let response = LinearizedResponse::at(req.geometry, &lo, req.scheme, req.drive, req.spec)?;
                for sig in req.sigs.iter().filter(|s| s.band_index == *band) {
                    for (o, t) in out.iter_mut().zip(&times) {
                        *o += alpha * delta_p_linearized(req.geometry, &lo, sig, &response, *t, false)?;
                    }
                }
            }
            out
        }
        WaveformModel::Full => {
            let p = delta_p_full_series(req.geometry, req.config, req.sigs, req.scheme, req.drive, req.spec, &times)?;
            let mean = p.iter().sum::<f64>() / p.len().max(1) as f64;
            p.into_iter().map(|v| v - mean).collect()
        }
    };
    Ok(Waveform { sample_rate: req.sample_rate, samples })
}
