use nalgebra::Matrix4;

use super::DriveParams;
use crate::Complex64;

/// Interaction-picture Hamiltonian divided by ħ (rad/s).
///
/// Diagonal `(0, −Δp, −Δp−Δc, −Δp−Δc−Δl)`; probe on (1,2), coupling on (2,3),
/// composite RF field `Ω/2` on (3,4) and `Ω*/2` on (4,3).
pub fn build_hamiltonian(drive: &DriveParams) -> Matrix4<Complex64> {
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut h = Matrix4::<Complex64>::zeros();
    let d2 = -drive.delta_p;
    let d3 = d2 - drive.delta_c;
    let d4 = d3 - drive.delta_l;
    h[(1, 1)] = re(d2);
    h[(2, 2)] = re(d3);
    h[(3, 3)] = re(d4);
    h[(0, 1)] = re(0.5 * drive.omega_p);
    h[(1, 0)] = re(0.5 * drive.omega_p);
    h[(1, 2)] = re(0.5 * drive.omega_c);
    h[(2, 1)] = re(0.5 * drive.omega_c);
    h[(2, 3)] = 0.5 * drive.omega_rf;
    h[(3, 2)] = 0.5 * drive.omega_rf.conj();
    h
}
