use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{invalid, Result};
use crate::Complex64;

/// Guard length appended after each burst, in symbols.
pub const SRRC_SPAN_SYMBOLS: usize = 10;

/// A Gray-mapped QAM payload with its pulse-shaping and IF parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QamStream {
    /// 4 (QPSK) or 16.
    pub order: usize,
    /// Symbols per second.
    pub symbol_rate: f64,
    pub rolloff: f64,
    /// Intermediate frequency (Hz).
    pub if_freq: f64,
    /// One bit per element (0 or 1).
    pub payload: Vec<u8>,
    /// Linear transmit power scale.
    pub tx_power_scale: f64,
}

impl QamStream {
    /// Stream with `n_bits` uniformly random bits.
    pub fn random(order: usize, symbol_rate: f64, if_freq: f64, n_bits: usize, rng: &mut impl Rng) -> Self {
        Self {
            order,
            symbol_rate,
            rolloff: 0.35,
            if_freq,
            payload: (0..n_bits).map(|_| rng.random_range(0..2u8)).collect(),
            tx_power_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 4 && self.order != 16 {
            return invalid(format!("QAM order must be 4 or 16, got {}", self.order));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return invalid(format!("roll-off must lie in (0, 1], got {}", self.rolloff));
        }
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return invalid("symbol rate must be positive");
        }
        if !(self.if_freq >= 0.0 && self.if_freq.is_finite()) {
            return invalid("IF must be non-negative");
        }
        if !(self.tx_power_scale >= 0.0 && self.tx_power_scale.is_finite()) {
            return invalid("transmit power scale must be non-negative");
        }
        if self.payload.is_empty() || self.payload.len() % self.bits_per_symbol() != 0 {
            return invalid(format!(
                "payload length {} is not a positive multiple of {}",
                self.payload.len(),
                self.bits_per_symbol()
            ));
        }
        if self.payload.iter().any(|b| *b > 1) {
            return invalid("payload entries must be 0 or 1");
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn symbol_count(&self) -> usize {
        self.payload.len() / self.bits_per_symbol()
    }

    pub fn symbols(&self) -> Vec<Complex64> {
        map_bits(self.order, &self.payload)
    }

    /// Occupied bandwidth `R_s·(1 + β)` (Hz).
    pub fn bandwidth(&self) -> f64 {
        self.symbol_rate * (1.0 + self.rolloff)
    }

    /// Integer oversampling factor at `sample_rate`.
    pub fn samples_per_symbol(&self, sample_rate: f64) -> Result<usize> {
        let sps = sample_rate / self.symbol_rate;
        if (sps - sps.round()).abs() > 1e-9 * sps || sps.round() < 2.0 {
            return invalid(format!("sample rate {sample_rate} Hz is not an integer multiple (≥ 2) of the symbol rate"));
        }
        Ok(sps.round() as usize)
    }
}

fn axis_levels(order: usize) -> (&'static [f64], f64) {
    match order {
        4 => (&[1.0, -1.0], FRAC_1_SQRT_2),
        // 00 → −3, 01 → −1, 10 → +3, 11 → +1.
        _ => (&[-3.0, -1.0, 3.0, 1.0], 1.0 / 10f64.sqrt()),
    }
}

/// Gray-coded amplitude for the bits of one axis (bit pattern as an index).
fn axis_value(order: usize, bits: usize) -> f64 {
    let (levels, scale) = axis_levels(order);
    levels[bits] * scale
}

/// Gray-mapped symbols with unit average energy. The first half of each
/// symbol's bits drives the in-phase axis.
pub fn map_bits(order: usize, bits: &[u8]) -> Vec<Complex64> {
    let per_axis = (order.trailing_zeros() / 2) as usize;
    bits.chunks_exact(2 * per_axis)
        .map(|c| {
            let value = |b: &[u8]| b.iter().fold(0usize, |acc, v| (acc << 1) | *v as usize);
            Complex64::new(axis_value(order, value(&c[..per_axis])), axis_value(order, value(&c[per_axis..])))
        })
        .collect()
}

/// Nearest constellation point and its bits.
pub fn slice(order: usize, r: Complex64, bits: &mut Vec<u8>) -> Complex64 {
    let per_axis = (order.trailing_zeros() / 2) as usize;
    let nearest = |x: f64| -> (usize, f64) {
        (0..1usize << per_axis)
            .map(|b| (b, axis_value(order, b)))
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .unwrap_or((0, 0.0))
    };
    let (bi, vi) = nearest(r.re);
    let (bq, vq) = nearest(r.im);
    for word in [bi, bq] {
        for k in (0..per_axis).rev() {
            bits.push(((word >> k) & 1) as u8);
        }
    }
    Complex64::new(vi, vq)
}

pub fn constellation(order: usize) -> Vec<Complex64> {
    let bps = order.trailing_zeros() as usize;
    (0..order)
        .map(|w| {
            let bits: Vec<u8> = (0..bps).rev().map(|k| ((w >> k) & 1) as u8).collect();
            map_bits(order, &bits)[0]
        })
        .collect()
}

/// Raised-cosine spectrum at frequency `f` in units of the symbol rate.
fn raised_cosine(f: f64, beta: f64) -> f64 {
    let f = f.abs();
    let (lo, hi) = (0.5 * (1.0 - beta), 0.5 * (1.0 + beta));
    if f <= lo {
        1.0
    } else if f >= hi {
        0.0
    } else {
        0.5 * (1.0 + (PI / beta * (f - lo)).cos())
    }
}

/// Raised-cosine samples on the `len`-point DFT grid at `sps` samples/symbol.
fn raised_cosine_bins(len: usize, sps: usize, beta: f64) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let k = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            raised_cosine(k * sps as f64 / len as f64, beta)
        })
        .collect()
}

/// Square-root raised-cosine filtering of a whole block in the frequency
/// domain (circular). A shaping/matched pair composes to a raised cosine
/// whose periodization is exactly Nyquist, so symbol-spaced samples carry no
/// ISI.
fn srrc_filter(x: &mut [Complex64], sps: usize, beta: f64, gain: f64) {
    let len = x.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(x);
    for (v, rc) in x.iter_mut().zip(raised_cosine_bins(len, sps, beta)) {
        *v *= rc.sqrt() * gain / len as f64;
    }
    planner.plan_fft_inverse(len).process(x);
}

fn rc_sum(len: usize, sps: usize, beta: f64) -> f64 {
    raised_cosine_bins(len, sps, beta).iter().sum()
}

/// Pulse-shapes `symbols` into a block of `block_symbols·sps` samples with
/// unit average power for unit-energy symbols. Symbol `m` peaks at `m·sps`.
pub(crate) fn shape(symbols: &[Complex64], sps: usize, beta: f64, block_symbols: usize) -> Vec<Complex64> {
    let len = block_symbols * sps;
    let mut x = vec![Complex64::new(0.0, 0.0); len];
    for (m, s) in symbols.iter().enumerate() {
        x[m * sps] = *s;
    }
    // Σ|h|² = sps gives unit power.
    let gain = (sps as f64 * len as f64 / rc_sum(len, sps, beta)).sqrt();
    srrc_filter(&mut x, sps, beta, gain);
    x
}

/// Matched filter normalized so the shaped/matched cascade has unit gain at
/// the symbol instants.
pub(crate) fn matched_filter(x: &mut [Complex64], sps: usize, beta: f64) {
    let len = x.len();
    let sum = rc_sum(len, sps, beta);
    let shaping_gain = (sps as f64 * len as f64 / sum).sqrt();
    srrc_filter(x, sps, beta, len as f64 / (shaping_gain * sum));
}

/// Complex baseband of `stream`: Gray mapping, then SRRC shaping over a block
/// of `symbol_count + SRRC_SPAN_SYMBOLS` symbols.
pub fn qam_modulate(stream: &QamStream, sample_rate: f64) -> Result<Vec<Complex64>> {
    stream.validate()?;
    let sps = stream.samples_per_symbol(sample_rate)?;
    Ok(shape(&stream.symbols(), sps, stream.rolloff, stream.symbol_count() + SRRC_SPAN_SYMBOLS))
}

/// Matched-filters a baseband block produced for `stream` and samples it at
/// the symbol instants.
pub fn matched_symbols(baseband: &[Complex64], stream: &QamStream, sample_rate: f64) -> Result<Vec<Complex64>> {
    let sps = stream.samples_per_symbol(sample_rate)?;
    if baseband.len() % sps != 0 || baseband.len() < stream.symbol_count() * sps {
        return invalid("baseband block does not match the stream");
    }
    let mut y = baseband.to_vec();
    matched_filter(&mut y, sps, stream.rolloff);
    Ok((0..stream.symbol_count()).map(|m| y[m * sps]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_gray_map() {
        let s = map_bits(4, &[0, 0, 0, 1, 1, 1, 1, 0]);
        let h = FRAC_1_SQRT_2;
        let expected = [(h, h), (h, -h), (-h, -h), (-h, h)];
        for (a, (re, im)) in s.iter().zip(expected) {
            assert!((a.re - re).abs() < 1e-15 && (a.im - im).abs() < 1e-15);
        }
    }

    #[test]
    fn constellations_have_unit_energy_and_gray_neighbours() {
        for order in [4, 16] {
            let c = constellation(order);
            let energy = c.iter().map(|s| s.norm_sqr()).sum::<f64>() / order as f64;
            assert!((energy - 1.0).abs() < 1e-12);
            let dmin = c
                .iter()
                .enumerate()
                .flat_map(|(i, a)| c.iter().skip(i + 1).map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in c.iter().enumerate() {
                for (j, b) in c.iter().enumerate() {
                    if i != j && ((a - b).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "order {order}: {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn slicing_inverts_mapping() {
        for order in [4usize, 16] {
            for (w, s) in constellation(order).iter().enumerate() {
                let mut bits = Vec::new();
                let p = slice(order, s * 1.05 + Complex64::new(0.02, -0.03), &mut bits);
                assert!((p - s).norm() < 1e-12);
                let back = bits.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
                assert_eq!(back, w);
            }
        }
    }

    #[test]
    fn shaped_block_is_isi_free() {
        let syms = map_bits(16, &(0..400).map(|i| ((i * 7 + i / 3) % 2) as u8).collect::<Vec<_>>());
        let mut x = shape(&syms, 40, 0.35, syms.len() + SRRC_SPAN_SYMBOLS);
        // Symbol-spaced SRRC pulses are orthogonal, so energy adds per symbol.
        let energy = x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let expected = 40.0 * syms.iter().map(|s| s.norm_sqr()).sum::<f64>();
        assert!((energy / expected - 1.0).abs() < 1e-12);
        matched_filter(&mut x, 40, 0.35);
        for (m, s) in syms.iter().enumerate() {
            assert!((x[m * 40] - s).norm() < 1e-12);
        }
    }
}
