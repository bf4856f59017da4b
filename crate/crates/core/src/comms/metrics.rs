use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::channel::Scenario;
use super::receiver::demodulate;
use super::{invalid, CommsError, Result, Waveform};
use crate::numerics::welch_psd;
use crate::Complex64;

/// Welch segment length for received-spectrum estimates.
const PSD_SEGMENT: usize = 4096;

/// Link quality of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// Error vector magnitude (%).
    pub evm_pct: f64,
    pub ber: f64,
    /// Mean received PSD over the flat top `IF ± R_s(1 − β)/2` of the user's
    /// spectrum (dB re 1 unit²/Hz).
    pub rx_psd_db: f64,
    /// Received signal-to-interference ratio after aperture gains (dB).
    pub sir_eff_db: f64,
    pub bits: usize,
    pub locked: bool,
}

/// RMS error vector in percent after least-squares complex gain alignment.
pub fn compute_evm(rx: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if rx.len() != reference.len() {
        return Err(CommsError::LengthMismatch { left: rx.len(), right: reference.len() });
    }
    if rx.len() < 100 {
        return invalid(format!("EVM needs at least 100 symbols, got {}", rx.len()));
    }
    let ref_energy: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    if ref_energy <= 0.0 {
        return invalid("reference symbols carry no energy");
    }
    let num: Complex64 = rx.iter().zip(reference).map(|(r, s)| r * s.conj()).sum();
    let g = num / ref_energy;
    if g.norm() == 0.0 {
        return Ok(100.0);
    }
    let err: f64 = rx.iter().zip(reference).map(|(r, s)| (r / g - s).norm_sqr()).sum();
    Ok(100.0 * (err / ref_energy).sqrt())
}

/// Fraction of differing bits.
pub fn compute_ber(rx: &[u8], tx: &[u8]) -> Result<f64> {
    if rx.len() != tx.len() {
        return Err(CommsError::LengthMismatch { left: rx.len(), right: tx.len() });
    }
    if tx.is_empty() {
        return invalid("no bits to compare");
    }
    Ok(rx.iter().zip(tx).filter(|(a, b)| a != b).count() as f64 / tx.len() as f64)
}

/// Gray-coded AWGN bit error ratio at the symbol SNR implied by `evm_pct`.
pub fn analytic_ber(order: usize, evm_pct: f64) -> f64 {
    let snr = (evm_pct / 100.0).powi(-2);
    match order {
        4 => 0.5 * erfc((snr / 2.0).sqrt()),
        _ => 0.375 * erfc((snr / 10.0).sqrt()),
    }
}

/// Mean one-sided PSD of `waveform` over `center ± bandwidth/2`, in dB.
pub fn rx_psd_db(waveform: &Waveform, center: f64, bandwidth: f64) -> f64 {
    let x: Vec<Complex64> = waveform.samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let (freqs, psd) = welch_psd(&x, waveform.sample_rate, PSD_SEGMENT);
    let (lo, hi) = (center - bandwidth / 2.0, center + bandwidth / 2.0);
    let band: Vec<f64> = freqs.iter().zip(&psd).filter(|(f, _)| (lo..=hi).contains(*f)).map(|(_, p)| 2.0 * p).collect();
    if band.is_empty() {
        return f64::NEG_INFINITY;
    }
    10.0 * (band.iter().sum::<f64>() / band.len() as f64).log10()
}

/// Demodulates user `index` of `scenario` from `waveform` and scores it.
/// A lost lock is reported with BER 0.5.
pub fn evaluate_user(scenario: &Scenario, waveform: &Waveform, index: usize) -> Result<LinkMetrics> {
    let user = scenario.users.get(index).ok_or_else(|| CommsError::InvalidParameter(format!("no user {index}")))?;
    let stream = &user.stream;
    let d = demodulate(waveform, stream)?;
    let locked = d.locked();
    let evm_pct = compute_evm(&d.symbols, &stream.symbols())?;
    let ber = if locked { compute_ber(&d.bits, &stream.payload)?.min(0.5) } else { 0.5 };

    let bw = stream.bandwidth();
    let flat = stream.symbol_rate * (1.0 - stream.rolloff);
    let user_power = scenario.gain(&user.tone)?.norm_sqr() * (user.tone.rabi.powi(2) * stream.tx_power_scale);
    let mut interference = 0.0;
    for i in &scenario.interferers {
        if (i.if_freq - stream.if_freq).abs() < 0.5 * (bw + i.bandwidth_hz) {
            interference += scenario.gain(&i.tone)?.norm_sqr() * i.tone.rabi.powi(2);
        }
    }
    let sir_eff_db = 10.0 * (user_power / interference).log10();
    Ok(LinkMetrics {
        evm_pct,
        ber,
        rx_psd_db: rx_psd_db(waveform, stream.if_freq, flat),
        sir_eff_db,
        bits: stream.payload.len(),
        locked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_examples() {
        let tx: Vec<u8> = (0..10_000).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(compute_ber(&tx, &tx).unwrap(), 0.0);
        let flipped: Vec<u8> = tx.iter().map(|b| 1 - b).collect();
        assert_eq!(compute_ber(&flipped, &tx).unwrap(), 1.0);
        let mut one = tx.clone();
        one[17] ^= 1;
        assert_eq!(compute_ber(&one, &tx).unwrap(), 1e-4);
        assert!(matches!(compute_ber(&tx[1..], &tx), Err(CommsError::LengthMismatch { .. })));
    }

    #[test]
    fn evm_examples() {
        let s: Vec<Complex64> = super::super::qam::constellation(16).into_iter().cycle().take(160).collect();
        assert_eq!(compute_evm(&s, &s).unwrap(), 0.0);
        let shifted: Vec<Complex64> = s.iter().map(|v| v + 0.1).collect();
        let evm = compute_evm(&shifted, &s).unwrap();
        assert!((evm - 10.0).abs() < 0.1, "{evm}");
    }

    #[test]
    fn analytic_ber_reference_points() {
        // QPSK at Es/N0 = 10 dB: Q(√10) = 7.83e-4.
        assert!((analytic_ber(4, 100.0 * 10f64.powf(-0.5)) - 7.827e-4).abs() < 1e-6);
        assert!(analytic_ber(16, 10.0) < analytic_ber(16, 20.0));
    }
}
