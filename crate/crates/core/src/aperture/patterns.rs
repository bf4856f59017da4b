use super::{invalid, ApertureError, ApertureGeometry, BandConfig, BeamPattern, LoConfiguration, Result, RfTone};
use crate::numerics::{simpson_weights, sinc, Chebyshev};
use crate::quantum::{sensitivity, DopplerSpec, DriveParams, LevelScheme, DEFAULT_SENSITIVITY_STEP};
use crate::Complex64;

/// Sensitivity floor relative to the largest LO amplitude.
const SENSITIVITY_FLOOR: f64 = 1e-4;
/// Nodes with `|Σ|` below this fraction of the largest tone are nulls.
const NULL_THRESHOLD: f64 = 1e-12;

/// `sinc²[L/λ_l·(cos θ_s − cos θ_l)]`, normalized by its sampled maximum.
pub fn pattern_single_peak(geometry: &ApertureGeometry, lo: &RfTone, theta_s_deg: &[f64]) -> Result<BeamPattern> {
    geometry.validate()?;
    let ratio = geometry.length / lo.wavelength();
    let cos_l = lo.cos_direction();
    let raw = theta_s_deg
        .iter()
        .map(|t| sinc(ratio * (t.to_radians().cos() - cos_l)).powi(2))
        .collect();
    BeamPattern::from_raw(theta_s_deg.to_vec(), raw)
}

/// Small-aperture half-power beamwidth `0.886·λ/L` (radians).
pub fn hpbw_theoretical(length: f64, wavelength: f64) -> f64 {
    0.886 * wavelength / length
}

/// One sinc² pattern per band, each at its own wavelength.
pub fn pattern_multiband(
    geometry: &ApertureGeometry,
    bands: &[(BandConfig, RfTone)],
    theta_s_deg: &[f64],
) -> Result<Vec<BeamPattern>> {
    geometry.validate()?;
    for (i, (a, _)) in bands.iter().enumerate() {
        a.validate()?;
        if bands[i + 1..].iter().any(|(b, _)| (b.wavelength - a.wavelength).abs() <= 1e-12 * a.wavelength) {
            return invalid("bands must have distinct wavelengths");
        }
    }
    bands
        .iter()
        .map(|(band, lo)| {
            let ratio = geometry.length / band.wavelength;
            let cos_l = lo.cos_direction();
            let raw = theta_s_deg
                .iter()
                .map(|t| sinc(ratio * (t.to_radians().cos() - cos_l)).powi(2))
                .collect();
            BeamPattern::from_raw(theta_s_deg.to_vec(), raw)
        })
        .collect()
}

/// `∂Im[χ]/∂Ω_l` as a Chebyshev interpolant in `ln Ω` over `[floor, Ω_max]`.
///
/// The log axis resolves the narrow structure at Rabi frequencies near the
/// Rydberg linewidths.
/// Built once per (scheme, drive, Doppler spec) and shared by every pattern
/// evaluated with LO amplitudes inside its range.
#[derive(Debug, Clone)]
pub struct SensitivityTable {
    cheb: Chebyshev,
}

impl SensitivityTable {
    pub fn build(scheme: &LevelScheme, drive: &DriveParams, spec: &DopplerSpec, omega_max: f64) -> Result<Self> {
        if !(omega_max > 0.0 && omega_max.is_finite()) {
            return invalid("sensitivity table needs a positive upper Rabi frequency");
        }
        let floor = SENSITIVITY_FLOOR * omega_max;
        let cheb = Chebyshev::fit(floor.ln(), omega_max.ln(), 1e-9, 512, |log_omega| {
            sensitivity(scheme, &drive.with_lo(log_omega.exp()), spec, DEFAULT_SENSITIVITY_STEP)
                .map(|s| Complex64::new(s, 0.0))
        })
        .map_err(ApertureError::from)?;
        Ok(Self { cheb })
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.cheb.eval(omega.ln()).re
    }

    /// Rabi-frequency range covered by the table.
    pub fn domain(&self) -> (f64, f64) {
        let (a, b) = self.cheb.domain();
        (a.exp(), b.exp())
    }

    pub fn degree(&self) -> usize {
        self.cheb.degree()
    }

    pub fn check_covers(&self, omega: f64) -> Result<()> {
        let (a, b) = self.domain();
        if omega > b * (1.0 + 1e-12) {
            return invalid(format!("LO amplitude {omega:.6e} outside sensitivity table [{a:.6e}, {b:.6e}]"));
        }
        Ok(())
    }
}

/// Multipeak pattern plus the number of spatial nodes that fell on LO nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipeakPattern {
    pub pattern: BeamPattern,
    pub null_nodes: usize,
}

/// Reusable evaluator of `∫ S(y)·e^{j[k y cos θ_s − φ_l(y)]} dy` over a fixed
/// geometry and angle grid, for repeated calls with different LO settings.
#[derive(Debug, Clone)]
pub struct MultipeakEvaluator {
    ys: Vec<f64>,
    weights: Vec<f64>,
    angles_deg: Vec<f64>,
    wavenumber: f64,
    /// `e^{j k y_i cos θ_g}`, row-major by angle.
    steering: Vec<Complex64>,
    table: SensitivityTable,
}

impl MultipeakEvaluator {
    /// `wavenumber` is the shared LO/SIG wavenumber of the band.
    pub fn new(geometry: &ApertureGeometry, wavenumber: f64, table: SensitivityTable, theta_s_deg: &[f64]) -> Result<Self> {
        geometry.validate()?;
        let ys = geometry.positions();
        let weights = simpson_weights(ys.len(), geometry.length);
        let steering = theta_s_deg
            .iter()
            .flat_map(|t| {
                let kc = wavenumber * t.to_radians().cos();
                ys.iter().map(move |y| Complex64::from_polar(1.0, kc * y))
            })
            .collect();
        Ok(Self { ys, weights, angles_deg: theta_s_deg.to_vec(), wavenumber, steering, table })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn table(&self) -> &SensitivityTable {
        &self.table
    }

    /// Complex responses per angle and the number of null nodes. Null nodes
    /// use the floor amplitude and the phase of the preceding non-null node.
    pub fn response(&self, config: &LoConfiguration) -> Result<(Vec<Complex64>, usize)> {
        config.validate()?;
        if !config.is_single_band() {
            return invalid("multipeak patterns need all LO tones in one band");
        }
        if (config.tones[0].wavenumber() - self.wavenumber).abs() > 1e-9 * self.wavenumber {
            return invalid("LO frequency differs from the evaluator's band");
        }
        let max_rabi = config.max_rabi();
        if max_rabi <= 0.0 {
            return invalid("at least one LO tone needs a positive amplitude");
        }
        let total: f64 = config.tones.iter().map(|t| t.rabi).sum();
        self.table.check_covers(total)?;
        let floor = SENSITIVITY_FLOOR * max_rabi;

        let fields: Vec<Complex64> = self.ys.iter().map(|y| config.field_at(*y)).collect();
        let mut phases: Vec<Option<f64>> =
            fields.iter().map(|f| (f.norm() >= NULL_THRESHOLD * max_rabi).then(|| f.arg())).collect();
        let null_nodes = phases.iter().filter(|p| p.is_none()).count();
        if null_nodes == phases.len() {
            return Err(ApertureError::AmplitudeNull { y: self.ys[0] });
        }
        let mut last = phases.iter().flatten().next().copied().unwrap_or(0.0);
        for p in phases.iter_mut() {
            match p {
                Some(v) => last = *v,
                None => *p = Some(last),
            }
        }
        let kernel: Vec<Complex64> = fields
            .iter()
            .zip(&phases)
            .zip(&self.weights)
            .map(|((f, p), w)| Complex64::from_polar(w * self.table.eval(f.norm().max(floor)), -p.unwrap_or(0.0)))
            .collect();
        let m = self.ys.len();
        let response = self
            .steering
            .chunks_exact(m)
            .map(|row| row.iter().zip(&kernel).map(|(s, c)| s * c).sum())
            .collect();
        Ok((response, null_nodes))
    }

    /// Normalized pattern `|response|²` for one LO configuration.
    pub fn pattern(&self, config: &LoConfiguration) -> Result<MultipeakPattern> {
        let (response, null_nodes) = self.response(config)?;
        let raw = response.iter().map(|r| r.norm_sqr()).collect();
        Ok(MultipeakPattern { pattern: BeamPattern::from_raw(self.angles_deg.clone(), raw)?, null_nodes })
    }
}

/// Complex response `∫ S(y)·e^{j[k y cos θ_s − φ_l(y)]} dy` for each angle,
/// with `S(y)` read from `table` at the local LO amplitude.
pub fn multipeak_response(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    table: &SensitivityTable,
    theta_s_deg: &[f64],
) -> Result<(Vec<Complex64>, usize)> {
    config.validate()?;
    MultipeakEvaluator::new(geometry, config.tones[0].wavenumber(), table.clone(), theta_s_deg)?.response(config)
}

/// Normalized multipeak pattern `|∫ S(y)·e^{j[k y cos θ_s − φ_l(y)]} dy|²`.
pub fn pattern_multipeak(
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    theta_s_deg: &[f64],
) -> Result<MultipeakPattern> {
    config.validate()?;
    let total: f64 = config.tones.iter().map(|t| t.rabi).sum();
    let table = SensitivityTable::build(scheme, drive, spec, total)?;
    MultipeakEvaluator::new(geometry, config.tones[0].wavenumber(), table, theta_s_deg)?.pattern(config)
}
