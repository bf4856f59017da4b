use serde::Serialize;

use super::{EstimationError, Result};
use crate::aperture::BeamPattern;

/// Widths above this are flagged: the small-aperture law no longer applies.
pub const WIDE_BEAM_DEG: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HpbwMeasurement {
    pub width_deg: f64,
    pub wide_beam: bool,
}

/// Width between the half-power crossings on either side of the global
/// maximum, linearly interpolated between grid points. The threshold is half
/// the sampled maximum, so the result ignores overall scaling.
pub fn measure_hpbw(pattern: &BeamPattern) -> Result<HpbwMeasurement> {
    let (a, g) = (&pattern.angles_deg, &pattern.gains);
    let sector = a[a.len() - 1] - a[0];
    let no_crossing = || EstimationError::NoCrossing { sector_deg: sector };
    let peak = pattern.argmax();
    if peak == 0 || peak == g.len() - 1 {
        return Err(no_crossing());
    }
    let half = 0.5 * g[peak];
    let cross = |i: usize, j: usize| a[i] + (half - g[i]) * (a[j] - a[i]) / (g[j] - g[i]);
    let left = (1..=peak).rev().find(|&i| g[i - 1] < half).map(|i| cross(i - 1, i)).ok_or_else(no_crossing)?;
    let right = (peak..g.len() - 1).find(|&i| g[i + 1] < half).map(|i| cross(i, i + 1)).ok_or_else(no_crossing)?;
    let width = right - left;
    Ok(HpbwMeasurement { width_deg: width, wide_beam: width > WIDE_BEAM_DEG })
}
