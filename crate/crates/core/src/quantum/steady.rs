use nalgebra::{Matrix4, SymmetricEigen};

use super::{build_hamiltonian, DriveParams, LevelScheme, QuantumError, Result};
use crate::Complex64;

pub type Matrix4c = Matrix4<Complex64>;

const DIM: usize = 16;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Pivot ratio below which the trace-constrained system counts as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

#[inline]
fn idx(i: usize, j: usize) -> usize {
    4 * i + j
}

/// Steady-state density matrix of the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: Matrix4c,
}

impl DensityMatrix {
    pub fn ground() -> Self {
        let mut rho = Matrix4c::zeros();
        rho[(0, 0)] = ONE;
        Self { rho }
    }

    /// Probe coherence `ρ₂₁` (row 2, column 1 in one-based indexing).
    pub fn rho21(&self) -> Complex64 {
        self.rho[(1, 0)]
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.rho[(i, i)].re)
    }

    /// `max |ρ − ρ†|` over all elements.
    pub fn hermiticity_error(&self) -> f64 {
        (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// The 16×16 Lindblad generator acting on row-major vectorized `ρ`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub m: [[Complex64; DIM]; DIM],
}

impl Liouvillian {
    pub fn apply(&self, rho: &Matrix4c) -> Matrix4c {
        let mut out = Matrix4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let row = &self.m[idx(i, j)];
                let mut acc = ZERO;
                for k in 0..4 {
                    for l in 0..4 {
                        acc += row[idx(k, l)] * rho[(k, l)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        self.m.iter().map(|row| row.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Velocity derivative of the generator: Doppler shifts enter only the
    /// diagonal, as `−i(s_i − s_j)` with level shifts
    /// `s = (0, k_p, k_p − k_c, k_p − k_c)` per unit velocity.
    pub fn doppler_diagonal(scheme: &LevelScheme) -> [Complex64; DIM] {
        let kp = scheme.k_probe();
        let kc = scheme.k_coupling();
        let s = [0.0, kp, kp - kc, kp - kc];
        let mut out = [ZERO; DIM];
        for i in 0..4 {
            for j in 0..4 {
                out[idx(i, j)] = Complex64::new(0.0, -(s[i] - s[j]));
            }
        }
        out
    }
}

/// Builds `ρ̇ = −i[H,ρ] + L[ρ]` with `Γ = diag(0, γ₂, γ₃, γ₄)` and
/// repopulation `Λ = diag(γ₂ρ₂₂ + γ₄ρ₄₄, γ₃ρ₃₃, 0, 0)`.
pub fn liouvillian(scheme: &LevelScheme, drive: &DriveParams) -> Liouvillian {
    let h = build_hamiltonian(drive);
    let gamma = [0.0, scheme.gamma2, scheme.gamma3, scheme.gamma4];
    let mut m = [[ZERO; DIM]; DIM];
    let mi = Complex64::new(0.0, -1.0);
    let pi = Complex64::new(0.0, 1.0);
    for i in 0..4 {
        for j in 0..4 {
            let r = idx(i, j);
            for k in 0..4 {
                m[r][idx(k, j)] += mi * h[(i, k)];
                m[r][idx(i, k)] += pi * h[(k, j)];
            }
            m[r][r] -= Complex64::new(0.5 * (gamma[i] + gamma[j]), 0.0);
        }
    }
    m[idx(0, 0)][idx(1, 1)] += Complex64::new(scheme.gamma2, 0.0);
    m[idx(0, 0)][idx(3, 3)] += Complex64::new(scheme.gamma4, 0.0);
    m[idx(1, 1)][idx(2, 2)] += Complex64::new(scheme.gamma3, 0.0);
    Liouvillian { m }
}

/// Solves `L ρ = 0` with the (1,1) equation replaced by `tr ρ = 1`.
pub fn steady_state(scheme: &LevelScheme, drive: &DriveParams) -> Result<DensityMatrix> {
    scheme.validate()?;
    drive.validate()?;
    let l = liouvillian(scheme, drive);
    solve_trace_constrained(&l, scheme.gamma2.max(drive.omega_p))
}

/// Trace-constrained solve of an already assembled generator. `scale`
/// balances the trace row against the rate rows.
pub(crate) fn solve_trace_constrained(l: &Liouvillian, scale: f64) -> Result<DensityMatrix> {
    let mut a = l.m;
    let mut b = [ZERO; DIM];
    let s = Complex64::new(scale, 0.0);
    for k in 0..DIM {
        a[0][k] = ZERO;
    }
    for i in 0..4 {
        a[0][idx(i, i)] = s;
    }
    b[0] = s;
    let (x, pivot_ratio) = gauss_solve(&mut a, &mut b);
    if !(pivot_ratio >= SINGULAR_PIVOT_RATIO) {
        return Err(QuantumError::SingularSystem { pivot_ratio });
    }
    let mut rho = Matrix4c::zeros();
    for i in 0..4 {
        for j in 0..4 {
            rho[(i, j)] = x[idx(i, j)];
        }
    }
    let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix { rho })
}

/// In-place Gaussian elimination with partial pivoting. Returns the solution
/// and the ratio of smallest to largest pivot magnitude.
fn gauss_solve(a: &mut [[Complex64; DIM]; DIM], b: &mut [Complex64; DIM]) -> ([Complex64; DIM], f64) {
    let mut pmin = f64::INFINITY;
    let mut pmax = 0.0f64;
    for col in 0..DIM {
        let mut best = col;
        let mut best_mag = a[col][col].norm_sqr();
        for row in col + 1..DIM {
            let mag = a[row][col].norm_sqr();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best != col {
            a.swap(best, col);
            b.swap(best, col);
        }
        let pivot = a[col][col];
        let mag = pivot.norm();
        pmin = pmin.min(mag);
        pmax = pmax.max(mag);
        if mag == 0.0 {
            return ([ZERO; DIM], 0.0);
        }
        let inv = pivot.inv();
        for row in col + 1..DIM {
            let f = a[row][col] * inv;
            if f == ZERO {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            let src = &upper[col];
            let dst = &mut lower[0];
            for k in col + 1..DIM {
                dst[k] -= f * src[k];
            }
            dst[col] = ZERO;
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [ZERO; DIM];
    for row in (0..DIM).rev() {
        let mut acc = b[row];
        for k in row + 1..DIM {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    (x, if pmax > 0.0 { pmin / pmax } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular;

    fn generic() -> (LevelScheme, DriveParams) {
        let scheme = LevelScheme::default();
        let drive = DriveParams::default().with_lo(angular(10e6));
        (scheme, drive)
    }

    #[test]
    fn undriven_atom_relaxes_to_ground() {
        let scheme = LevelScheme::default();
        let drive = DriveParams { omega_p: 0.0, omega_c: 0.0, ..DriveParams::default() };
        let rho = steady_state(&scheme, &drive).unwrap();
        assert!((rho.rho - DensityMatrix::ground().rho).norm() < 1e-12);
    }

    #[test]
    fn contract_invariants_hold() {
        let (scheme, drive) = generic();
        let rho = steady_state(&scheme, &drive).unwrap();
        assert!(rho.hermiticity_error() <= 1e-12);
        assert!((rho.trace() - ONE).norm() <= 1e-12);
        assert!(rho.min_eigenvalue() >= -1e-10);
        let l = liouvillian(&scheme, &drive);
        let resid = l.apply(&rho.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(resid <= 1e-9 * scheme.gamma2.max(drive.omega_p), "residual {resid}");
    }

    #[test]
    fn liouvillian_preserves_trace() {
        let (scheme, drive) = generic();
        let l = liouvillian(&scheme, &drive);
        // Column sums over diagonal rows vanish: d/dt tr ρ = 0 for any ρ.
        for col in 0..DIM {
            let s: Complex64 = (0..4).map(|i| l.m[idx(i, i)][col]).sum();
            assert!(s.norm() < 1e-6, "column {col}: {s}");
        }
    }

    #[test]
    fn weak_probe_two_level_limit() {
        // Ω_c = 0 and no RF: ρ₂₁ = −iΩ_p/2 / (γ₂/2 − iΔ_p) to first order in Ω_p.
        let scheme = LevelScheme::default();
        let omega_p = scheme.gamma2 * 1e-4;
        let delta_p = angular(1.3e6);
        let drive = DriveParams { omega_p, omega_c: 0.0, delta_p, ..DriveParams::default() };
        let rho = steady_state(&scheme, &drive).unwrap();
        let expected = Complex64::new(0.0, -0.5 * omega_p) / Complex64::new(0.5 * scheme.gamma2, -delta_p);
        assert!((rho.rho21() - expected).norm() < 1e-6 * expected.norm());
        assert!(rho.rho21().im < 0.0);
    }
}
