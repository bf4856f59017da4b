//! Subcommand drivers.

use std::fmt::Write;
use std::path::Path;

use qaperture::aperture::{
    format_significant, pattern_multiband, pattern_multipeak, pattern_single_peak, BeamPattern, MultipeakEvaluator,
    SensitivityTable,
};
use qaperture::comms::{
    interference_csv, multiband_csv, multiuser_csv, run_interference_sweep, run_multiband, run_multiuser,
};
use qaperture::estimation::{eit_spectrum, fit_with_evaluator, lorentzian_pair_fit, EstimationError, PhaseFitOptions};
use qaperture::numerics::linspace;
use qaperture::Complex64;
use serde_json::json;

use crate::config::{ConfigDocument, Mode};
use crate::error::CliError;
use crate::output::OutputDir;

fn open(doc: &ConfigDocument, out: &Path, command: &str) -> Result<OutputDir, CliError> {
    OutputDir::create(out, command, doc.comms.seed, doc.to_toml()?)
}

fn mode_error(command: &str, mode: Option<Mode>, allowed: &str) -> CliError {
    match mode {
        None => CliError::Config(format!("`{command}` needs a mode (set run.mode or pass a flag; one of {allowed})")),
        Some(m) => CliError::Config(format!("run.mode `{m:?}` is not valid for `{command}` (expected one of {allowed})")),
    }
}

pub fn pattern(doc: &ConfigDocument, out: &Path) -> Result<(), CliError> {
    let thetas = doc.theta_grid()?;
    let geometry = doc.geometry()?;
    let mode = doc.run.mode;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    match mode {
        Some(Mode::Single) => {
            let tones = doc.lo_tones()?;
            if tones.len() != 1 {
                return Err(CliError::Config(format!("single mode needs exactly one [[lo]], got {}", tones.len())));
            }
            files.push(("pattern.csv".to_string(), pattern_single_peak(&geometry, &tones[0], &thetas)?));
        }
        Some(Mode::Multipeak) => {
            let p = doc.atom.physics();
            let mp = pattern_multipeak(&geometry, &doc.lo_config()?, &p.scheme, &p.drive, &p.spec, &thetas)?;
            if mp.null_nodes > 0 {
                warnings.push(format!("{} spatial nodes fell on LO nulls", mp.null_nodes));
            }
            files.push(("pattern.csv".to_string(), mp.pattern));
        }
        Some(Mode::Multiband) => {
            let bands = doc.bands()?;
            for (band, pattern) in bands.iter().zip(pattern_multiband(&geometry, &bands, &thetas)?) {
                files.push((format!("pattern_band{}.csv", band.0.band_index), pattern));
            }
        }
        other => return Err(mode_error("pattern", other, "single, multipeak, multiband")),
    }
    let mut dir = open(doc, out, "pattern")?;
    for w in warnings {
        dir.warn(w);
    }
    for (name, pattern) in files {
        dir.write(&name, pattern.to_csv().as_bytes())?;
    }
    dir.finish()?;
    Ok(())
}

pub fn spectrum(doc: &ConfigDocument, fit: bool, out: &Path) -> Result<(), CliError> {
    let r = &doc.run;
    if !(r.delta_c_start_rad_s.is_finite() && r.delta_c_stop_rad_s.is_finite())
        || r.delta_c_start_rad_s >= r.delta_c_stop_rad_s
    {
        return Err(CliError::Config(format!(
            "run.delta_c_start_rad_s ({}) must be below run.delta_c_stop_rad_s ({})",
            r.delta_c_start_rad_s, r.delta_c_stop_rad_s
        )));
    }
    if r.delta_c_points < 5 {
        return Err(CliError::Config(format!("run.delta_c_points must be at least 5, got {}", r.delta_c_points)));
    }
    let p = doc.atom.physics();
    let drive = p.drive.with_rf(Complex64::new(r.rf_rabi_rad_s, 0.0));
    let grid = linspace(r.delta_c_start_rad_s, r.delta_c_stop_rad_s, r.delta_c_points);
    let trace = eit_spectrum(&p.scheme, &drive, &p.spec, &grid)?;

    let mut csv = String::from("delta_c_rad_s,im_chi\n");
    for (d, a) in trace.detunings.iter().zip(&trace.absorption) {
        let _ = writeln!(csv, "{},{}", format_significant(*d, 12), format_significant(*a, 12));
    }
    let mut dir = open(doc, out, if fit { "spectrum --fit" } else { "spectrum" })?;
    dir.write("spectrum.csv", csv.as_bytes())?;
    if fit {
        match lorentzian_pair_fit(&trace) {
            Ok(pair) => {
                dir.manifest.results.insert("separation_rad_s".into(), json!(pair.separation));
                dir.manifest.results.insert("lorentzian_fit".into(), json!(pair));
            }
            Err(e @ EstimationError::DegenerateFit(_)) => {
                dir.manifest.results.insert("degenerate_fit".into(), json!(true));
                dir.warn(format!("DegenerateFit: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    dir.finish()?;
    Ok(())
}

pub fn fit(doc: &ConfigDocument, measured_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(measured_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", measured_path.display())))?;
    let measured = BeamPattern::from_csv(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", measured_path.display())))?;
    let geometry = doc.geometry()?;
    let config = doc.lo_config()?;
    config.validate()?;
    let p = doc.atom.physics();
    let total: f64 = config.tones.iter().map(|t| t.rabi).sum();
    let table = SensitivityTable::build(&p.scheme, &p.drive, &p.spec, total)?;
    let evaluator = MultipeakEvaluator::new(&geometry, config.tones[0].wavenumber(), table, &measured.angles_deg)?;
    let options = PhaseFitOptions {
        grid_points: doc.run.fit_grid_points,
        budget: doc.run.fit_budget,
        tolerance: doc.run.fit_tolerance,
    };
    let result = fit_with_evaluator(&measured, &evaluator, &config, &options)?;

    let mut fitted = config.clone();
    for (tone, phase) in fitted.tones.iter_mut().zip(&result.phases_rad) {
        tone.phase = *phase;
    }
    let model = evaluator.pattern(&fitted)?.pattern;
    let mut overlay = String::from("theta_deg,measured,model\n");
    for ((a, m), g) in measured.angles_deg.iter().zip(&measured.gains).zip(&model.gains) {
        let _ = writeln!(overlay, "{:.4},{},{}", a, format_significant(*m, 9), format_significant(*g, 9));
    }
    let mut json = serde_json::to_string_pretty(&result)
        .map_err(|e| CliError::Numerical(format!("cannot serialize fit result: {e}")))?;
    json.push('\n');

    let mut dir = open(doc, out, "fit")?;
    if !result.converged {
        dir.warn(format!("phase fit did not converge within {} evaluations", result.evaluations));
    }
    dir.write("fit.json", json.as_bytes())?;
    dir.write("fit_overlay.csv", overlay.as_bytes())?;
    dir.manifest.results.insert("residual".into(), json!(result.residual));
    dir.finish()?;
    Ok(())
}

pub fn link(doc: &ConfigDocument, out: &Path) -> Result<(), CliError> {
    let base = doc.scenario()?;
    let (name, csv) = match doc.run.mode {
        Some(Mode::Interference) => {
            let rows = run_interference_sweep(&base, &doc.run.lengths_m, &doc.run.sirs_db)?;
            ("link_interference.csv", interference_csv(&rows))
        }
        Some(Mode::Multiuser) => {
            if doc.run.lo_schedule_dbm.is_empty() {
                return Err(CliError::Config("multiuser runs need run.lo_schedule_dbm".into()));
            }
            let schedule: Vec<Vec<Option<f64>>> = doc
                .run
                .lo_schedule_dbm
                .iter()
                .map(|step| step.iter().map(|&p| (p != f64::NEG_INFINITY).then_some(p)).collect())
                .collect();
            let rows = run_multiuser(&base, &schedule)?;
            ("link_multiuser.csv", multiuser_csv(&rows))
        }
        Some(Mode::Multiband) => {
            let offsets =
                if doc.run.offsets_deg.is_empty() { vec![vec![0.0; base.users.len()]] } else { doc.run.offsets_deg.clone() };
            let rows = run_multiband(&base, &offsets)?;
            ("link_multiband.csv", multiband_csv(&rows))
        }
        other => return Err(mode_error("link", other, "interference, multiuser, multiband")),
    };
    let mut dir = open(doc, out, "link")?;
    let unlocked = csv.lines().filter(|l| l.ends_with(",false")).count();
    if unlocked > 0 {
        dir.warn(format!("{unlocked} user rows lost carrier lock (BER reported as 0.5)"));
    }
    dir.write(name, csv.as_bytes())?;
    dir.finish()?;
    Ok(())
}
