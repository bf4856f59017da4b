use super::{susceptibility_scale, DopplerSpec, DriveParams, LevelScheme, QuantumError, Result, VelocityRule};
use crate::Complex64;

pub const DEFAULT_SENSITIVITY_STEP: f64 = 1e-3;
/// Relative steps below this are dominated by solver rounding.
const MIN_RELATIVE_STEP: f64 = 1e-6;

/// `∂Im[χ]/∂Ω_l` at the LO-only operating point `Ω_l = |drive.omega_rf|`,
/// by central difference with `h = step·Ω_l`.
///
/// Both sides of the difference use one velocity rule adapted at `Ω_l`, so
/// the quotient carries no quadrature-refinement noise.
pub fn sensitivity(scheme: &LevelScheme, drive: &DriveParams, spec: &DopplerSpec, step: f64) -> Result<f64> {
    let omega_l = drive.omega_rf.norm();
    check_step(omega_l, step)?;
    let rule = VelocityRule::adapted(scheme, drive, spec)?;
    central_difference(scheme, drive, &rule, omega_l, step * omega_l)
}

/// Richardson-extrapolated variant: `(4·D(h/2) − D(h)) / 3`.
pub fn sensitivity_richardson(
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    step: f64,
) -> Result<f64> {
    let omega_l = drive.omega_rf.norm();
    check_step(omega_l, 0.5 * step)?;
    let rule = VelocityRule::adapted(scheme, drive, spec)?;
    let coarse = central_difference(scheme, drive, &rule, omega_l, step * omega_l)?;
    let fine = central_difference(scheme, drive, &rule, omega_l, 0.5 * step * omega_l)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn check_step(omega_l: f64, step: f64) -> Result<()> {
    if !(omega_l > 0.0 && omega_l.is_finite()) {
        return Err(QuantumError::InvalidParameter(format!("LO Rabi frequency must be positive, got {omega_l}")));
    }
    if !(step > 0.0 && step <= 0.1) {
        return Err(QuantumError::InvalidParameter(format!("relative step must lie in (0, 0.1], got {step}")));
    }
    if step < MIN_RELATIVE_STEP {
        return Err(QuantumError::StepTooSmall { step: step * omega_l });
    }
    Ok(())
}

pub(crate) fn absorption_with_rule(
    scheme: &LevelScheme,
    drive: &DriveParams,
    rule: &VelocityRule,
    omega_rf: f64,
) -> Result<f64> {
    let d = drive.with_rf(Complex64::new(omega_rf, 0.0));
    let rho = rule.average(scheme, &d)?;
    Ok(-susceptibility_scale(scheme, drive.omega_p) * rho.im)
}

fn central_difference(
    scheme: &LevelScheme,
    drive: &DriveParams,
    rule: &VelocityRule,
    omega_l: f64,
    h: f64,
) -> Result<f64> {
    let plus = absorption_with_rule(scheme, drive, rule, omega_l + h)?;
    let minus = absorption_with_rule(scheme, drive, rule, omega_l - h)?;
    Ok((plus - minus) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular;

    #[test]
    fn rejects_bad_steps() {
        let scheme = LevelScheme::default();
        let drive = DriveParams::default().with_lo(angular(10e6));
        let spec = DopplerSpec::default();
        assert!(matches!(sensitivity(&scheme, &drive, &spec, 1e-9), Err(QuantumError::StepTooSmall { .. })));
        assert!(matches!(sensitivity(&scheme, &drive, &spec, 0.5), Err(QuantumError::InvalidParameter(_))));
        let no_lo = DriveParams::default();
        assert!(sensitivity(&scheme, &no_lo, &spec, 1e-3).is_err());
    }
}
