//! Thermal-velocity averaging of the probe coherence.
//!
//! Atoms moving at `v` along the beams see `Δp − k_p·v` and `Δc + k_c·v`
//! (counter-propagating probe and coupling). The average is taken against
//! the Maxwell-Boltzmann density `exp(−v²/u²)/(√π·u)` truncated to
//! `|v| ≤ truncation·u` and renormalized.
//!
//! The integrand carries resonances far narrower than `u` (sub-m/s EIT
//! features against `u ≈ 190 m/s` for Cs at room temperature), so a fixed
//! rule cannot converge. The window is split into `node_count` panels, extra
//! breakpoints are graded around the poles of `ρ₂₁(v)` (the generalized
//! eigenvalues of the velocity-affine generator), and panels are bisected
//! under an embedded Gauss-Kronrod error estimate.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use super::steady::{liouvillian, solve_trace_constrained, Liouvillian};
use super::{DriveParams, LevelScheme, QuantumError, Result};
use crate::numerics::quadrature::gk15_panel;
use crate::Complex64;

const REL_TOL: f64 = 1e-11;
const MAX_PANELS: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerSpec {
    /// Panels in the initial uniform partition of the velocity window.
    pub node_count: usize,
    /// Half-width of the velocity window in units of `u`.
    pub truncation: f64,
}

impl Default for DopplerSpec {
    fn default() -> Self {
        Self { node_count: 64, truncation: 4.0 }
    }
}

impl DopplerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(QuantumError::InvalidParameter(format!(
                "node_count must be at least 8, got {}",
                self.node_count
            )));
        }
        if !(self.truncation >= 3.0 && self.truncation.is_finite()) {
            return Err(QuantumError::InvalidParameter(format!(
                "truncation must be at least 3, got {}",
                self.truncation
            )));
        }
        Ok(())
    }
}

/// Velocity nodes and normalized weights (`Σ w = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityRule {
    pub velocities: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Generator at `v = 0` plus its per-velocity diagonal.
pub(crate) struct VelocityModel {
    base: Liouvillian,
    slope: [Complex64; 16],
    scale: f64,
}

impl VelocityModel {
    pub(crate) fn new(scheme: &LevelScheme, drive: &DriveParams) -> Self {
        Self {
            base: liouvillian(scheme, drive),
            slope: Liouvillian::doppler_diagonal(scheme),
            scale: scheme.gamma2.max(drive.omega_p),
        }
    }

    pub(crate) fn rho21(&self, v: f64) -> Result<Complex64> {
        let mut l = self.base.clone();
        for (k, s) in self.slope.iter().enumerate() {
            l.m[k][k] += s * v;
        }
        match solve_trace_constrained(&l, self.scale) {
            Ok(rho) => Ok(rho.rho21()),
            Err(QuantumError::SingularSystem { pivot_ratio }) => {
                Err(QuantumError::SingularAtVelocity { velocity: v, pivot_ratio })
            }
            Err(e) => Err(e),
        }
    }

    /// Velocities where `ρ₂₁(v)` has poles: `det(A + vB) = 0` with `A` the
    /// trace-constrained generator at rest and `B` its velocity slope.
    fn poles(&self) -> Vec<Complex64> {
        type M16 = SMatrix<Complex64, 16, 16>;
        let mut a = M16::zeros();
        let mut b = M16::zeros();
        for i in 0..16 {
            for j in 0..16 {
                a[(i, j)] = self.base.m[i][j];
            }
            b[(i, i)] = self.slope[i];
        }
        for j in 0..16 {
            a[(0, j)] = Complex64::new(0.0, 0.0);
            b[(0, j)] = Complex64::new(0.0, 0.0);
        }
        for i in 0..4 {
            a[(0, 5 * i)] = Complex64::new(self.scale, 0.0);
        }
        let Some(lu) = a.lu().try_inverse() else {
            return Vec::new();
        };
        let c = lu * b;
        let Some(eig) = c.schur().eigenvalues() else {
            return Vec::new();
        };
        let peak = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        eig.iter()
            .filter(|z| z.norm() > 1e-12 * peak)
            .map(|z| -z.inv())
            .collect()
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    weight_sum: f64,
    error: f64,
}

fn gaussian(v: f64, u: f64) -> f64 {
    (-(v / u).powi(2)).exp() / (std::f64::consts::PI.sqrt() * u)
}

fn integrate_panel(model: &VelocityModel, u: f64, a: f64, b: f64) -> Result<Panel> {
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut weight_sum = 0.0;
    for (v, wk, wg) in gk15_panel(a, b) {
        let g = gaussian(v, u);
        let f = model.rho21(v)? * g;
        kron += f * wk;
        gauss += f * wg;
        weight_sum += wk * g;
    }
    Ok(Panel { a, b, value: kron, weight_sum, error: (kron - gauss).norm() })
}

fn initial_breakpoints(model: &VelocityModel, u: f64, spec: &DopplerSpec) -> Vec<f64> {
    let half = spec.truncation * u;
    let n = spec.node_count;
    let mut pts: Vec<f64> = (0..=n).map(|i| -half + 2.0 * half * i as f64 / n as f64).collect();
    let panel = 2.0 * half / n as f64;
    for p in model.poles() {
        let (center, width) = (p.re, p.im.abs().max(1e-9 * u));
        if center.abs() > half + panel {
            continue;
        }
        pts.push(center);
        let mut d = width;
        while d < panel {
            pts.push(center - d);
            pts.push(center + d);
            d *= 4.0;
        }
    }
    pts.retain(|x| x.abs() <= half);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * half);
    pts
}

/// Builds the adaptive rule and returns it with the averaged coherence.
fn adaptive(
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
) -> Result<(VelocityRule, Complex64)> {
    scheme.validate()?;
    drive.validate()?;
    spec.validate()?;
    let u = scheme.rms_velocity();
    let model = VelocityModel::new(scheme, drive);
    let pts = initial_breakpoints(&model, u, spec);
    let mut panels = Vec::with_capacity(pts.len() * 2);
    for w in pts.windows(2) {
        panels.push(integrate_panel(&model, u, w[0], w[1])?);
    }
    loop {
        let total: Complex64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if err <= REL_TOL * total.norm().max(1e-300) || panels.len() >= MAX_PANELS {
            break;
        }
        // Bisect every panel carrying a disproportionate share of the error.
        let threshold = (REL_TOL * total.norm()) / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split_any = false;
        for p in panels {
            if p.error > threshold && next.len() < MAX_PANELS {
                let mid = 0.5 * (p.a + p.b);
                next.push(integrate_panel(&model, u, p.a, mid)?);
                next.push(integrate_panel(&model, u, mid, p.b)?);
                split_any = true;
            } else {
                next.push(p);
            }
        }
        panels = next;
        if !split_any {
            break;
        }
    }
    let norm: f64 = panels.iter().map(|p| p.weight_sum).sum();
    let total: Complex64 = panels.iter().map(|p| p.value).sum::<Complex64>() / norm;
    let mut velocities = Vec::with_capacity(panels.len() * 15);
    let mut weights = Vec::with_capacity(panels.len() * 15);
    for p in &panels {
        for (v, wk, _) in gk15_panel(p.a, p.b) {
            velocities.push(v);
            weights.push(wk * gaussian(v, u) / norm);
        }
    }
    Ok((VelocityRule { velocities, weights }, total))
}

impl VelocityRule {
    /// Rule adapted to the coherence of `drive`.
    pub fn adapted(scheme: &LevelScheme, drive: &DriveParams, spec: &DopplerSpec) -> Result<Self> {
        adaptive(scheme, drive, spec).map(|(rule, _)| rule)
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// `Σ w_k·ρ₂₁(v_k)` for a drive, reusing this rule's nodes.
    pub fn average(&self, scheme: &LevelScheme, drive: &DriveParams) -> Result<Complex64> {
        let model = VelocityModel::new(scheme, drive);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&v, &w) in self.velocities.iter().zip(&self.weights) {
            acc += model.rho21(v)? * w;
        }
        Ok(acc)
    }

    /// Same rule with node order reversed.
    pub fn reversed(&self) -> Self {
        Self {
            velocities: self.velocities.iter().rev().cloned().collect(),
            weights: self.weights.iter().rev().cloned().collect(),
        }
    }
}

/// Doppler-averaged probe coherence `ρ̄₂₁`.
pub fn doppler_averaged_coherence(
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
) -> Result<Complex64> {
    adaptive(scheme, drive, spec).map(|(_, value)| value)
}
