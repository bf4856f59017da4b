use std::f64::consts::PI;

use rustfft::num_traits::Zero;

use super::qam::{matched_filter, slice, QamStream};
use super::{invalid, CommsError, Result, Waveform};
use crate::Complex64;

/// Symbols used as a known sync word to resolve the π/2 phase ambiguity.
const SYNC_SYMBOLS: usize = 64;
const DECISION_ITERATIONS: usize = 6;

/// Receiver output before the lock decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    /// Gain- and phase-corrected symbols.
    pub symbols: Vec<Complex64>,
    pub bits: Vec<u8>,
    /// `|⟨r⁴⟩|/⟨|r|⁴⟩` of the timing-aligned samples.
    pub lock_metric: f64,
    pub lock_threshold: f64,
    /// Sample offset of the symbol grid.
    pub timing_offset: usize,
    /// Complex gain removed from the matched-filter samples.
    pub gain: Complex64,
}

impl Demodulated {
    pub fn locked(&self) -> bool {
        self.lock_metric >= self.lock_threshold
    }
}

/// Runs the receiver chain without failing on a lost lock.
pub fn demodulate(waveform: &Waveform, template: &QamStream) -> Result<Demodulated> {
    template.validate()?;
    let sps = template.samples_per_symbol(waveform.sample_rate)?;
    let n_sym = template.symbol_count();
    let len = waveform.samples.len();
    if len % sps != 0 || len < n_sym * sps {
        return invalid(format!("waveform of {len} samples does not hold {n_sym} symbols at {sps} samples/symbol"));
    }
    if waveform.samples.iter().any(|v| !v.is_finite()) {
        return invalid("waveform has non-finite samples");
    }

    let w = 2.0 * PI * template.if_freq / waveform.sample_rate;
    let mut r: Vec<Complex64> = waveform
        .samples
        .iter()
        .enumerate()
        .map(|(n, x)| 2.0 * x * Complex64::from_polar(1.0, -w * n as f64))
        .collect();
    matched_filter(&mut r, sps, template.rolloff);

    let at = |k: usize, m: usize| r[(k + m * sps) % len];
    let timing_offset = (0..sps)
        .map(|k| (k, (0..n_sym).map(|m| at(k, m).norm_sqr()).sum::<f64>()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0, |(k, _)| k);
    let z: Vec<Complex64> = (0..n_sym).map(|m| at(timing_offset, m)).collect();

    let fourth: Complex64 = z.iter().map(|v| v.powi(4)).sum();
    let abs4: f64 = z.iter().map(|v| v.norm_sqr().powi(2)).sum();
    let lock_metric = if abs4 > 0.0 { fourth.norm() / abs4 } else { 0.0 };
    let lock_threshold = (5.0 / (n_sym as f64).sqrt()).max(0.02);

    let power = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / n_sym as f64;
    let mut gain = if power > 0.0 {
        Complex64::from_polar(power.sqrt(), (fourth.arg() - PI) / 4.0)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let order = template.order;
    let decide = |g: Complex64| -> Vec<Complex64> {
        let mut scratch = Vec::new();
        z.iter().map(|v| slice(order, v / g, &mut scratch)).collect()
    };
    for _ in 0..DECISION_ITERATIONS {
        let d = decide(gain);
        let num: Complex64 = z.iter().zip(&d).map(|(v, s)| v * s.conj()).sum();
        let den: f64 = d.iter().map(|s| s.norm_sqr()).sum();
        if den > 0.0 && !num.is_zero() {
            gain = num / den;
        }
    }

    let reference = template.symbols();
    let sync = SYNC_SYMBOLS.min(n_sym);
    let best = (0..4)
        .map(|q| {
            let rot = Complex64::i().powi(q);
            let score: f64 = z[..sync].iter().zip(&reference[..sync]).map(|(v, s)| (v * rot / gain * s.conj()).re).sum();
            (rot, score)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(Complex64::new(1.0, 0.0), |(rot, _)| rot);
    gain /= best;

    let symbols: Vec<Complex64> = z.iter().map(|v| v / gain).collect();
    let mut bits = Vec::with_capacity(template.payload.len());
    for s in &symbols {
        slice(order, *s, &mut bits);
    }
    Ok(Demodulated { symbols, bits, lock_metric, lock_threshold, timing_offset, gain })
}

/// Digital downconversion at the template's IF, SRRC matched filter,
/// maximum-energy symbol timing, power-of-4 then decision-directed carrier
/// phase, and nearest-neighbour slicing.
pub fn superhet_demodulate(waveform: &Waveform, template: &QamStream) -> Result<(Vec<Complex64>, Vec<u8>)> {
    let d = demodulate(waveform, template)?;
    if !d.locked() {
        return Err(CommsError::LockFailure { metric: d.lock_metric, threshold: d.lock_threshold });
    }
    Ok((d.symbols, d.bits))
}
