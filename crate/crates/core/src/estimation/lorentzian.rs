use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use serde::Serialize;

use super::{EstimationError, Result, SpectrumTrace};

/// Second extremum must reach this fraction of the first one's prominence.
const MIN_RELATIVE_PROMINENCE: f64 = 0.05;

/// Two Lorentzians plus a constant baseline, in the trace's units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorentzianPair {
    pub centers: [f64; 2],
    /// Half widths at half maximum.
    pub widths: [f64; 2],
    /// Signed peak heights above the baseline (negative for dips).
    pub amplitudes: [f64; 2],
    pub baseline: f64,
    /// `|center₂ − center₁|`.
    pub separation: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

impl LorentzianPair {
    pub fn eval(&self, x: f64) -> f64 {
        self.baseline
            + (0..2)
                .map(|i| self.amplitudes[i] / (1.0 + ((x - self.centers[i]) / self.widths[i]).powi(2)))
                .sum::<f64>()
    }
}

/// Model `c + Σ a_i / (1 + ((x − x_i)/w_i)²)` on normalized axes.
/// Parameters: `[c, a₁, x₁, w₁, a₂, x₂, w₂]`.
struct PairProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    p: DVector<f64>,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for PairProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let p = &self.p;
        Some(DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(x, y)| {
                let l1 = p[1] / (1.0 + ((x - p[2]) / p[3]).powi(2));
                let l2 = p[4] / (1.0 + ((x - p[5]) / p[6]).powi(2));
                p[0] + l1 + l2 - y
            }),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let p = &self.p;
        let mut j = DMatrix::zeros(self.x.len(), 7);
        for (r, x) in self.x.iter().enumerate() {
            j[(r, 0)] = 1.0;
            for o in [1usize, 4] {
                let (a, c, w) = (p[o], p[o + 1], p[o + 2]);
                let u = (x - c) / w;
                let d = 1.0 / (1.0 + u * u);
                j[(r, o)] = d;
                j[(r, o + 1)] = a * d * d * 2.0 * u / w;
                j[(r, o + 2)] = a * d * d * 2.0 * u * u / w;
            }
        }
        Some(j)
    }
}

/// Local maxima of `z` with their prominence, most prominent first.
fn prominent_peaks(z: &[f64]) -> Vec<(usize, f64)> {
    let n = z.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if z[i] > z[i - 1] {
            // Treat a plateau as one peak at its left edge.
            let mut j = i;
            while j + 1 < n && z[j + 1] == z[i] {
                j += 1;
            }
            if j + 1 < n && z[j + 1] < z[i] {
                let mut left_min = z[i];
                for k in (0..i).rev() {
                    if z[k] > z[i] {
                        break;
                    }
                    left_min = left_min.min(z[k]);
                }
                let mut right_min = z[i];
                for &v in &z[j + 1..] {
                    if v > z[i] {
                        break;
                    }
                    right_min = right_min.min(v);
                }
                out.push((i, z[i] - left_min.max(right_min)));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Half width at half prominence, walking outward from `i`.
fn half_width(x: &[f64], z: &[f64], i: usize, prominence: f64) -> f64 {
    let level = z[i] - 0.5 * prominence;
    let left = (0..i).rev().find(|&k| z[k] < level).map(|k| x[i] - x[k]);
    let right = (i + 1..z.len()).find(|&k| z[k] < level).map(|k| x[k] - x[i]);
    match (left, right) {
        (Some(l), Some(r)) => l.min(r),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => x[x.len() - 1] - x[0],
    }
    .max(x[1] - x[0])
}

/// Least-squares fit of two Lorentzians plus a constant, initialized from the
/// two most prominent extrema (peaks or dips, whichever pair stands out more).
pub fn lorentzian_pair_fit(trace: &SpectrumTrace) -> Result<LorentzianPair> {
    let n = trace.detunings.len();
    if n < 8 {
        return Err(EstimationError::DegenerateFit(format!("{n} samples are too few")));
    }
    let (x0, x1) = (trace.detunings[0], trace.detunings[n - 1]);
    let (mid, half_span) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
    let y_scale = trace.absorption.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if y_scale == 0.0 {
        return Err(EstimationError::DegenerateFit("trace is identically zero".into()));
    }
    let x: Vec<f64> = trace.detunings.iter().map(|v| (v - mid) / half_span).collect();
    let y: Vec<f64> = trace.absorption.iter().map(|v| v / y_scale).collect();
    let step = trace.detunings.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
    for sign in [-1.0, 1.0] {
        let z: Vec<f64> = y.iter().map(|v| sign * v).collect();
        let peaks = prominent_peaks(&z);
        if peaks.len() >= 2 && peaks[1].1 >= MIN_RELATIVE_PROMINENCE * peaks[0].1 {
            let strength = peaks[1].1;
            if best.as_ref().is_none_or(|(_, b)| strength > b[1].1) {
                best = Some((sign, peaks));
            }
        }
    }
    let Some((sign, peaks)) = best else {
        return Err(EstimationError::DegenerateFit("fewer than two distinct extrema".into()));
    };

    let z: Vec<f64> = y.iter().map(|v| sign * v).collect();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[n / 2];
    let mut p0 = vec![baseline];
    for &(i, prom) in &peaks[..2] {
        p0.extend([y[i] - baseline, x[i], half_width(&x, &z, i, prom)]);
    }
    let problem = PairProblem { x: &x, y: &y, p: DVector::from_vec(p0) };
    let (fitted, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    let p = fitted.p;
    if !report.termination.was_successful() && !p.iter().all(|v| v.is_finite()) {
        return Err(EstimationError::DegenerateFit(format!("{:?}", report.termination)));
    }
    let mut pair = [(p[1], p[2], p[3].abs()), (p[4], p[5], p[6].abs())];
    pair.sort_by(|a, b| a.1.total_cmp(&b.1));
    let centers = [mid + half_span * pair[0].1, mid + half_span * pair[1].1];
    let separation = centers[1] - centers[0];
    if !separation.is_finite() || separation < 2.0 * step {
        return Err(EstimationError::DegenerateFit(format!("centers {separation:.3e} apart, grid step {step:.3e}")));
    }
    let residual = 2.0 * report.objective_function * y_scale * y_scale;
    Ok(LorentzianPair {
        centers,
        widths: [half_span * pair[0].2, half_span * pair[1].2],
        amplitudes: [pair[0].0 * y_scale, pair[1].0 * y_scale],
        baseline: p[0] * y_scale,
        separation,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prominence_of_two_bumps() {
        let z = [0.0, 1.0, 0.2, 0.6, 0.0];
        let p = prominent_peaks(&z);
        assert_eq!(p[0], (1, 1.0));
        assert_eq!(p[1].0, 3);
        assert!((p[1].1 - 0.4).abs() < 1e-12);
    }
}
