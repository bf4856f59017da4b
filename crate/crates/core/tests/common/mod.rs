//! Test-only oracles, kept independent of the production solve paths.
#![allow(dead_code)]

use nalgebra::{Matrix4, SMatrix};
use qaperture::quantum::{DriveParams, LevelScheme};
use qaperture::Complex64;

type M16 = SMatrix<Complex64, 16, 16>;

/// Right-hand side of the master equation in matrix form.
pub fn master_rhs(scheme: &LevelScheme, drive: &DriveParams, rho: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut h = Matrix4::<Complex64>::zeros();
    h[(0, 1)] = c(drive.omega_p / 2.0);
    h[(1, 0)] = c(drive.omega_p / 2.0);
    h[(1, 2)] = c(drive.omega_c / 2.0);
    h[(2, 1)] = c(drive.omega_c / 2.0);
    h[(2, 3)] = drive.omega_rf / 2.0;
    h[(3, 2)] = drive.omega_rf.conj() / 2.0;
    h[(1, 1)] = c(-drive.delta_p);
    h[(2, 2)] = c(-drive.delta_p - drive.delta_c);
    h[(3, 3)] = c(-drive.delta_p - drive.delta_c - drive.delta_l);
    let gamma = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        c(0.0),
        c(scheme.gamma2),
        c(scheme.gamma3),
        c(scheme.gamma4),
    ));
    let mut repop = Matrix4::<Complex64>::zeros();
    repop[(0, 0)] = rho[(1, 1)] * scheme.gamma2 + rho[(3, 3)] * scheme.gamma4;
    repop[(1, 1)] = rho[(2, 2)] * scheme.gamma3;
    (h * rho - rho * h) * Complex64::new(0.0, -1.0) - (gamma * rho + rho * gamma) * c(0.5) + repop
}

/// Classical fourth-order Runge-Kutta from `|1⟩⟨1|` to time `t_end` with a
/// fixed step. The stepper is linear, so its one-step map is assembled once
/// and iterated by repeated squaring (same iterates as stepping).
pub fn rk4_long_time(scheme: &LevelScheme, drive: &DriveParams, t_end: f64) -> Matrix4<Complex64> {
    let mut l = M16::zeros();
    for k in 0..16 {
        let mut e = Matrix4::<Complex64>::zeros();
        e[(k / 4, k % 4)] = Complex64::new(1.0, 0.0);
        let col = master_rhs(scheme, drive, &e);
        for r in 0..16 {
            l[(r, k)] = col[(r / 4, r % 4)];
        }
    }
    let norm = (0..16).map(|r| (0..16).map(|k| l[(r, k)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let h = 0.5 / norm;
    let hl = l * Complex64::new(h, 0.0);
    let hl2 = hl * hl;
    let hl3 = hl2 * hl;
    let hl4 = hl3 * hl;
    let step = M16::identity() + hl + hl2 * Complex64::new(0.5, 0.0) + hl3 * Complex64::new(1.0 / 6.0, 0.0)
        + hl4 * Complex64::new(1.0 / 24.0, 0.0);
    let mut n = (t_end / h).ceil() as u64;
    let mut base = step;
    let mut acc = M16::identity();
    while n > 0 {
        if n & 1 == 1 {
            acc = base * acc;
        }
        base = base * base;
        n >>= 1;
    }
    let mut out = Matrix4::<Complex64>::zeros();
    for r in 0..16 {
        out[(r / 4, r % 4)] = acc[(r, 0)];
    }
    out
}

/// Independent Doppler average: plain uniform midpoint rule with many nodes
/// over ±5u (slow; for spot checks).
pub fn midpoint_doppler(
    scheme: &LevelScheme,
    drive: &DriveParams,
    nodes: usize,
    solve: impl Fn(&DriveParams) -> Complex64,
) -> Complex64 {
    let u = scheme.rms_velocity();
    let half = 5.0 * u;
    let dv = 2.0 * half / nodes as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wsum = 0.0;
    for i in 0..nodes {
        let v = -half + (i as f64 + 0.5) * dv;
        let w = (-(v / u).powi(2)).exp();
        let mut d = *drive;
        d.delta_p -= scheme.k_probe() * v;
        d.delta_c += scheme.k_coupling() * v;
        acc += solve(&d) * w;
        wsum += w;
    }
    acc / wsum
}
