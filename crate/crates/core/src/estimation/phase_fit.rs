use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus, KV};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use super::{invalid, EstimationError, Result};
use crate::aperture::{ApertureGeometry, BeamPattern, LoConfiguration, MultipeakEvaluator, SensitivityTable};
use crate::quantum::{DopplerSpec, DriveParams, LevelScheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFitOptions {
    /// Coarse grid points per free phase.
    pub grid_points: usize,
    /// Total pattern evaluations allowed.
    pub budget: usize,
    /// Simplex standard-deviation tolerance on the residual.
    pub tolerance: f64,
}

impl Default for PhaseFitOptions {
    fn default() -> Self {
        Self { grid_points: 16, budget: 5000, tolerance: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// One phase per LO tone in `[0, 2π)`; the first is the fixed reference.
    pub phases_rad: Vec<f64>,
    /// `Σ (measured − model)²` over the measured grid.
    pub residual: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// Best residual after the grid search and after each simplex iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

struct Objective<'a> {
    evaluator: &'a MultipeakEvaluator,
    base: &'a LoConfiguration,
    measured: &'a [f64],
    count: AtomicUsize,
}

impl Objective<'_> {
    /// Residual for the free phases (all tones but the first).
    fn residual(&self, free: &[f64]) -> std::result::Result<f64, crate::aperture::ApertureError> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let config = with_phases(self.base, free);
        let model = self.evaluator.pattern(&config)?.pattern;
        Ok(model.gains.iter().zip(self.measured).map(|(m, g)| (m - g).powi(2)).sum())
    }
}

#[derive(Clone, Default)]
struct BestCost(Arc<Mutex<Vec<f64>>>);

impl<I: State<Float = f64>> Observe<I> for BestCost {
    fn observe_iter(&mut self, state: &I, _kv: &KV) -> std::result::Result<(), ArgminError> {
        self.0.lock().expect("observer lock").push(state.get_best_cost());
        Ok(())
    }
}

fn with_phases(base: &LoConfiguration, free: &[f64]) -> LoConfiguration {
    let mut config = base.clone();
    config.tones[0].phase = 0.0;
    for (tone, phase) in config.tones.iter_mut().skip(1).zip(free) {
        tone.phase = *phase;
    }
    config
}

/// Recovers LO phases by minimizing `Σ |F̄_mp − F_mp(φ)|²` over the measured
/// grid: a coarse grid search, then a Nelder–Mead polish from the best grid
/// point. The first LO's phase is fixed at 0 since a common phase leaves the
/// pattern unchanged. `config` supplies amplitudes, frequency and directions.
pub fn fit_lo_phases(
    measured: &BeamPattern,
    geometry: &ApertureGeometry,
    config: &LoConfiguration,
    scheme: &LevelScheme,
    drive: &DriveParams,
    spec: &DopplerSpec,
    options: &PhaseFitOptions,
) -> Result<FitResult> {
    config.validate()?;
    if options.grid_points < 1 || options.budget < 1 {
        return invalid("grid points and budget must be positive");
    }
    let total: f64 = config.tones.iter().map(|t| t.rabi).sum();
    let table = SensitivityTable::build(scheme, drive, spec, total)?;
    let evaluator = MultipeakEvaluator::new(geometry, config.tones[0].wavenumber(), table, &measured.angles_deg)?;
    fit_with_evaluator(measured, &evaluator, config, options)
}

/// [`fit_lo_phases`] against a prepared evaluator, so repeated fits share
/// one sensitivity table.
pub fn fit_with_evaluator(
    measured: &BeamPattern,
    evaluator: &MultipeakEvaluator,
    config: &LoConfiguration,
    options: &PhaseFitOptions,
) -> Result<FitResult> {
    if evaluator.angles() != measured.angles_deg.as_slice() {
        return invalid("evaluator grid differs from the measured grid");
    }
    let objective = Objective { evaluator, base: config, measured: &measured.gains, count: AtomicUsize::new(0) };
    let free = config.tones.len() - 1;
    if free == 0 {
        let residual = objective.residual(&[])?;
        return Ok(FitResult {
            phases_rad: vec![0.0],
            residual,
            converged: true,
            evaluations: 1,
            history: vec![residual],
        });
    }

    // Coarse grid, thinned so it uses at most half the budget.
    let mut points = options.grid_points;
    while points > 1 && points.pow(free as u32) > options.budget / 2 {
        points -= 1;
    }
    let cells = points.pow(free as u32);
    let mut best = (f64::INFINITY, vec![0.0; free]);
    for cell in 0..cells {
        let mut rem = cell;
        let phases: Vec<f64> = (0..free)
            .map(|_| {
                let k = rem % points;
                rem /= points;
                2.0 * PI * k as f64 / points as f64
            })
            .collect();
        let r = objective.residual(&phases)?;
        if r < best.0 {
            best = (r, phases);
        }
    }
    let mut history = vec![best.0];

    let used = objective.count.load(Ordering::Relaxed);
    let remaining = options.budget.saturating_sub(used);
    let step = PI / points as f64;
    let mut simplex = vec![best.1.clone()];
    for i in 0..free {
        let mut v = best.1.clone();
        v[i] += step;
        simplex.push(v);
    }
    let mut converged = false;
    if remaining > free + 1 {
        let observer = BestCost::default();
        let solver = NelderMead::new(simplex).with_sd_tolerance(options.tolerance).map_err(argmin_error)?;
        // Each iteration costs one to `free + 2` evaluations; stop early on budget.
        let max_iters = (remaining - (free + 1)) / 2;
        let run = Executor::new(&objective, solver)
            .configure(|s| s.max_iters(max_iters as u64))
            .add_observer(observer.clone(), ObserverMode::Always)
            .run()
            .map_err(argmin_error)?;
        let state = run.state();
        if state.get_best_cost() < best.0 {
            best = (state.get_best_cost(), state.get_best_param().cloned().unwrap_or(best.1));
        }
        converged = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        );
        let trail = observer.0.lock().expect("observer lock").clone();
        for r in trail {
            history.push(r.min(*history.last().unwrap_or(&f64::INFINITY)));
        }
    }

    let mut phases_rad = vec![0.0];
    phases_rad.extend(best.1.iter().map(|p| p.rem_euclid(2.0 * PI)));
    Ok(FitResult {
        phases_rad,
        residual: best.0,
        converged,
        evaluations: objective.count.load(Ordering::Relaxed),
        history,
    })
}

fn argmin_error(e: ArgminError) -> EstimationError {
    match e.downcast::<crate::aperture::ApertureError>() {
        Ok(a) => EstimationError::Aperture(a),
        Err(other) => EstimationError::InvalidParameter(format!("optimizer failure: {other}")),
    }
}

impl CostFunction for &Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        Ok(self.residual(p)?)
    }
}
