use std::f64::consts::PI;

use proptest::prelude::*;
use qaperture::aperture::*;
use qaperture::estimation::*;
use qaperture::quantum::{DopplerSpec, DriveParams, LevelScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const KU: f64 = 15.59e9;
const MHZ: f64 = 2.0 * PI * 1e6;

fn setup() -> (LevelScheme, DriveParams, DopplerSpec) {
    (LevelScheme::default(), DriveParams::default(), DopplerSpec::default())
}

fn geometry(length: f64, freq: f64) -> ApertureGeometry {
    let lambda = RfTone::new(1.0, freq, 270.0, 0.0).wavelength();
    ApertureGeometry::new(length, lambda, LevelScheme::default().k_probe())
}

fn lorentzians(x: &[f64], centers: [f64; 2], width: f64, amp: f64, base: f64) -> Vec<f64> {
    x.iter()
        .map(|v| base + centers.iter().map(|c| amp / (1.0 + ((v - c) / width).powi(2))).sum::<f64>())
        .collect()
}

#[test]
fn hpbw_of_sampled_sinc() {
    let geo = geometry(0.08, KU);
    let lo = RfTone::new(1.0, KU, 270.0, 0.0);
    let fine = pattern_single_peak(&geo, &lo, &angle_grid(0.0, 180.0, 0.1)).unwrap();
    let m = measure_hpbw(&fine).unwrap();
    assert!((m.width_deg - 12.2).abs() <= 0.1, "{}", m.width_deg);
    assert!(!m.wide_beam);
    let coarse = pattern_single_peak(&geo, &lo, &angle_grid(0.0, 180.0, 0.2)).unwrap();
    assert!((measure_hpbw(&coarse).unwrap().width_deg - m.width_deg).abs() <= 0.2);

    let flat = BeamPattern::measured(angle_grid(0.0, 10.0, 1.0), vec![1.0; 11]).unwrap();
    assert!(matches!(measure_hpbw(&flat), Err(EstimationError::NoCrossing { .. })));
}

#[test]
fn hpbw_law_at_broadside() {
    let grid = angle_grid(0.0, 180.0, 0.05);
    let lo = RfTone::new(1.0, KU, 270.0, 0.0);
    for cm in [4.0, 5.0, 6.0, 7.0, 8.0, 10.0] {
        let geo = geometry(cm / 100.0, KU);
        let theory = hpbw_theoretical(geo.length, lo.wavelength()).to_degrees();
        let measured = measure_hpbw(&pattern_single_peak(&geo, &lo, &grid).unwrap()).unwrap().width_deg;
        assert!(theory <= 30.0);
        assert!(((measured - theory) / theory).abs() <= 0.02, "L = {cm} cm: {measured} vs {theory}");
    }
}

#[test]
fn wide_beams_are_flagged() {
    let geo = geometry(0.04, 3.39e9);
    let lo = RfTone::new(1.0, 3.39e9, 270.0, 0.0);
    let m = measure_hpbw(&pattern_single_peak(&geo, &lo, &angle_grid(0.0, 180.0, 0.5)).unwrap()).unwrap();
    assert!(m.wide_beam);
}

#[test]
fn synthetic_pair_recovered() {
    let x: Vec<f64> = (0..=400).map(|i| -40.0 * MHZ + 0.2 * MHZ * i as f64).collect();
    let y = lorentzians(&x, [-5.0 * MHZ, 5.0 * MHZ], 2.0 * MHZ, -1.0, 3.0);
    let fit = lorentzian_pair_fit(&SpectrumTrace::new(x.clone(), y.clone()).unwrap()).unwrap();
    assert!((fit.separation / (10.0 * MHZ) - 1.0).abs() <= 1e-3, "{}", fit.separation / MHZ);
    assert!(fit.residual < 1e-12);

    let scaled = y.iter().map(|v| 7.5e-7 * v).collect();
    let fit2 = lorentzian_pair_fit(&SpectrumTrace::new(x.clone(), scaled).unwrap()).unwrap();
    assert!((fit2.separation / fit.separation - 1.0).abs() < 1e-9);

    let peaks = lorentzians(&x, [-12.0 * MHZ, 3.0 * MHZ], 1.5 * MHZ, 2.0, 0.5);
    let fit3 = lorentzian_pair_fit(&SpectrumTrace::new(x, peaks).unwrap()).unwrap();
    assert!((fit3.separation / (15.0 * MHZ) - 1.0).abs() <= 1e-3);
}

#[test]
fn single_lorentzian_is_degenerate() {
    let x: Vec<f64> = (0..=200).map(|i| -20.0 * MHZ + 0.2 * MHZ * i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 - 0.5 / (1.0 + (v / (2.0 * MHZ)).powi(2))).collect();
    assert!(matches!(
        lorentzian_pair_fit(&SpectrumTrace::new(x, y).unwrap()),
        Err(EstimationError::DegenerateFit(_))
    ));
}

#[test]
fn noisy_pair_within_two_percent() {
    let x: Vec<f64> = (0..=400).map(|i| -40.0 * MHZ + 0.2 * MHZ * i as f64).collect();
    let clean = lorentzians(&x, [-5.0 * MHZ, 5.0 * MHZ], 2.0 * MHZ, -1.0, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x10_2e27);
    for _ in 0..20 {
        let noisy: Vec<f64> = clean.iter().map(|v| v + 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
        let fit = lorentzian_pair_fit(&SpectrumTrace::new(x.clone(), noisy).unwrap()).unwrap();
        assert!((fit.separation / (10.0 * MHZ) - 1.0).abs() <= 0.02, "{}", fit.separation / MHZ);
    }
}

#[test]
fn eit_and_at_spectra() {
    let (scheme, drive, spec) = setup();
    let grid = coupling_grid(40.0 * MHZ, 201);
    let eit = eit_spectrum(&scheme, &drive, &spec, &grid).unwrap();
    assert!(eit.absorption.iter().all(|a| *a >= -1e-9));
    let dip = eit.absorption.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(grid[dip], 0.0);
    assert!(matches!(lorentzian_pair_fit(&eit), Err(EstimationError::DegenerateFit(_))));

    let at = eit_spectrum(&scheme, &drive.with_lo(20.0 * MHZ), &spec, &grid).unwrap();
    assert!(at.absorption.iter().all(|a| *a >= -1e-9));
    let fit = lorentzian_pair_fit(&at).unwrap();
    assert!((fit.separation / (20.0 * MHZ) - 1.0).abs() <= 0.1, "{}", fit.separation / MHZ);
}

#[test]
fn eit_at_response_is_flat_and_linear() {
    let (scheme, drive, spec) = setup();
    let geo = geometry(0.08, KU);
    let grid = coupling_grid(40.0 * MHZ, 201);
    let thetas = angle_grid(0.0, 180.0, 15.0);
    let sig = RfTone::new(10.0 * MHZ, KU, 90.0, 0.0);
    let r1 = eit_at_angular_response(&geo, &sig, &scheme, &drive, &spec, &thetas, &grid).unwrap();
    let min = r1.pattern.gains.iter().cloned().fold(1.0, f64::min);
    assert!(1.0 - min <= 0.01);

    let double = RfTone { rabi: 20.0 * MHZ, ..sig };
    let r2 = eit_at_angular_response(&geo, &double, &scheme, &drive, &spec, &[90.0], &grid).unwrap();
    let ratio = r2.splittings[0] / r1.splittings[0];
    assert!((ratio - 2.0).abs() <= 0.1, "{ratio}");

    let silent = RfTone { rabi: 0.0, ..sig };
    assert!(matches!(
        eit_at_angular_response(&geo, &silent, &scheme, &drive, &spec, &[30.0, 60.0], &grid),
        Err(EstimationError::DegenerateFit(_))
    ));
}

fn two_lo(phase2: f64) -> LoConfiguration {
    LoConfiguration::new(vec![
        RfTone::new(10.0 * MHZ, KU, 240.0, 0.0),
        RfTone::new(7.0 * MHZ, KU, 300.0, phase2),
    ])
}

#[test]
fn phase_fit_recovers_pattern() {
    let (scheme, drive, spec) = setup();
    let geo = geometry(0.06, KU);
    let grid = angle_grid(0.0, 180.0, 1.0);
    let truth = two_lo(2.1);
    let measured = pattern_multipeak(&geo, &truth, &scheme, &drive, &spec, &grid).unwrap().pattern;
    let fit = fit_lo_phases(&measured, &geo, &two_lo(0.0), &scheme, &drive, &spec, &PhaseFitOptions::default()).unwrap();
    assert!(fit.residual <= 1e-6, "{}", fit.residual);
    assert!(fit.evaluations <= 5000);
    assert!(fit.phases_rad.iter().all(|p| (0.0..2.0 * PI).contains(p)));
    assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    let json = serde_json::to_value(&fit).unwrap();
    for key in ["phases_rad", "residual", "converged", "evaluations"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json.as_object().unwrap().len(), 4);

    let mut refit = two_lo(0.0);
    refit.tones[1].phase = fit.phases_rad[1];
    let overlay = pattern_multipeak(&geo, &refit, &scheme, &drive, &spec, &grid).unwrap().pattern;
    let worst = overlay.gains.iter().zip(&measured.gains).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3);
}

#[test]
fn phase_fit_single_lo_is_immediate() {
    let (scheme, drive, spec) = setup();
    let geo = geometry(0.06, KU);
    let grid = angle_grid(0.0, 180.0, 1.0);
    let cfg = LoConfiguration::single(RfTone::new(10.0 * MHZ, KU, 250.0, 0.0));
    let measured = pattern_single_peak(&geo, &cfg.tones[0], &grid).unwrap();
    let fit = fit_lo_phases(&measured, &geo, &cfg, &scheme, &drive, &spec, &PhaseFitOptions::default()).unwrap();
    assert_eq!(fit.evaluations, 1);
    assert!(fit.residual < 1e-6);
}

#[test]
fn phase_fit_with_noise() {
    let (scheme, drive, spec) = setup();
    let geo = geometry(0.06, KU);
    let grid = angle_grid(0.0, 180.0, 1.0);
    let truth = two_lo(4.0);
    let total = truth.tones.iter().map(|t| t.rabi).sum();
    let table = SensitivityTable::build(&scheme, &drive, &spec, total).unwrap();
    let evaluator = MultipeakEvaluator::new(&geo, truth.tones[0].wavenumber(), table, &grid).unwrap();
    let clean = evaluator.pattern(&truth).unwrap().pattern;
    let mut rng = ChaCha8Rng::seed_from_u64(0xf17);
    for _ in 0..5 {
        let noisy: Vec<f64> =
            clean.gains.iter().map(|g| g * (1.0 + 0.02 * rng.sample::<f64, _>(StandardNormal))).collect();
        let floor: f64 = noisy.iter().zip(&clean.gains).map(|(n, c)| (n - c).powi(2)).sum();
        let measured = BeamPattern::measured(grid.clone(), noisy).unwrap();
        let fit = fit_with_evaluator(&measured, &evaluator, &two_lo(0.0), &PhaseFitOptions::default()).unwrap();
        assert!(fit.residual <= 2.0 * floor, "{} vs floor {floor}", fit.residual);
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hpbw_scale_invariant(scale in 1e-6f64..1e6, cm in 4.0f64..10.0, theta_l in 240.0f64..300.0) {
        let geo = geometry(cm / 100.0, KU);
        let p = pattern_single_peak(&geo, &RfTone::new(1.0, KU, theta_l, 0.0), &angle_grid(0.0, 180.0, 0.25)).unwrap();
        let scaled = BeamPattern::measured(p.angles_deg.clone(), p.gains.iter().map(|g| g * scale).collect()).unwrap();
        let a = measure_hpbw(&p).unwrap().width_deg;
        let b = measure_hpbw(&scaled).unwrap().width_deg;
        prop_assert!((a - b).abs() < 1e-9);
    }
}
