//! Single-bin DFT and Welch power spectral density.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::Complex64;

/// Peak amplitude of the `freq_hz` component: `(2/N)·|Σ x_n e^{−j2πf n/fs}|`.
/// Exact for a sinusoid when the record spans an integer number of periods.
pub fn tone_amplitude(samples: &[f64], sample_rate: f64, freq_hz: f64) -> f64 {
    tone_phasor(samples, sample_rate, freq_hz).norm()
}

/// Complex amplitude `A·e^{jφ}` of the component `A·cos(2πft + φ)`.
pub fn tone_phasor(samples: &[f64], sample_rate: f64, freq_hz: f64) -> Complex64 {
    if samples.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let w = 2.0 * PI * freq_hz / sample_rate;
    let sum: Complex64 = samples.iter().enumerate().map(|(n, x)| Complex64::from_polar(*x, -w * n as f64)).sum();
    let scale = if freq_hz == 0.0 { 1.0 } else { 2.0 };
    sum * (scale / samples.len() as f64)
}

/// One-sided Welch PSD with a Hann window and 50 % overlap.
///
/// Returns `(frequencies_hz, psd)` in units of `x²/Hz`. Complex input gives a
/// two-sided spectrum ordered from `−fs/2` to `fs/2`.
pub fn welch_psd(samples: &[Complex64], sample_rate: f64, segment: usize) -> (Vec<f64>, Vec<f64>) {
    let seg = segment.min(samples.len()).max(2);
    let window: Vec<f64> = (0..seg).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / seg as f64).cos()).collect();
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut acc = vec![0.0; seg];
    let mut count = 0usize;
    let mut start = 0;
    while start + seg <= samples.len() {
        let mut buf: Vec<Complex64> = samples[start..start + seg].iter().zip(&window).map(|(x, w)| x * w).collect();
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += seg / 2;
    }
    let norm = 1.0 / (count.max(1) as f64 * energy * sample_rate);
    let half = seg / 2;
    let mut freqs = Vec::with_capacity(seg);
    let mut psd = Vec::with_capacity(seg);
    for i in 0..seg {
        let k = (i + seg - half) % seg;
        let f = if k >= seg - half { k as f64 - seg as f64 } else { k as f64 };
        freqs.push(f * sample_rate / seg as f64);
        psd.push(acc[k] * norm);
    }
    (freqs, psd)
}
