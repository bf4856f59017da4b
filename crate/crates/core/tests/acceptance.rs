//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use qaperture::aperture::*;
use qaperture::comms::*;
use qaperture::estimation::*;
use qaperture::quantum::*;
use qaperture::{angular, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MHZ: f64 = 2.0 * PI * 1e6;
const OMEGA_L: f64 = 10.0 * MHZ;
const LENGTHS_CM: [f64; 6] = [4.0, 5.0, 6.0, 7.0, 8.0, 10.0];

type Outcome = std::result::Result<String, String>;

fn setup() -> (LevelScheme, DriveParams, DopplerSpec) {
    (LevelScheme::default(), DriveParams::default(), DopplerSpec::default())
}

fn geometry(length: f64, freq: f64) -> ApertureGeometry {
    ApertureGeometry::new(length, 299_792_458.0 / freq, LevelScheme::default().k_probe())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Full-model IF line amplitude versus the sinc² law on a 1° grid.
fn criterion_1() -> Outcome {
    let (scheme, drive, spec) = setup();
    let grid = angle_grid(0.0, 180.0, 1.0);
    let mut worst_all = 0.0f64;
    let mut lines = Vec::new();
    for freq in [S_BAND_HZ, KU_BAND_HZ] {
        for cm in [4.0, 8.0, 10.0] {
            let start = Instant::now();
            let geo = geometry(cm / 100.0, freq);
            let lo = RfTone::new(OMEGA_L, freq, 270.0, 0.0);
            let cfg = LoConfiguration::single(lo);
            let amps = grid
                .par_iter()
                .map(|th| {
                    let sig = RfTone::new(0.01 * OMEGA_L, freq + 5e3, *th, 0.0);
                    if_amplitude_full(&geo, &cfg, &sig, &scheme, &drive, &spec)
                })
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(err)?;
            let measured = BeamPattern::from_raw(grid.clone(), amps.iter().map(|a| a * a).collect()).map_err(err)?;
            let closed = pattern_single_peak(&geo, &lo, &grid).map_err(err)?;
            let worst = measured.gains.iter().zip(&closed.gains).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_all = worst_all.max(worst);
            lines.push(format!("{:.2} GHz {cm} cm: {worst:.1e} in {:.0} s", freq / 1e9, start.elapsed().as_secs_f64()));
        }
    }
    check(worst_all <= 0.01, format!("max |Δgain| {worst_all:.2e} ≤ 0.01 [{}]", lines.join("; ")))
}

/// Beam peak opposite the LO for every length, band and LO direction.
fn criterion_2() -> Outcome {
    let step = 0.1;
    let grid = angle_grid(0.0, 180.0, step);
    let mut worst = 0.0f64;
    for freq in [S_BAND_HZ, KU_BAND_HZ] {
        for cm in LENGTHS_CM {
            for theta_l in [240.0, 270.0, 300.0] {
                let lo = RfTone::new(OMEGA_L, freq, theta_l, 0.0);
                let p = pattern_single_peak(&geometry(cm / 100.0, freq), &lo, &grid).map_err(err)?;
                worst = worst.max((p.peak_angle() - (360.0 - theta_l)).abs());
            }
        }
    }
    check(worst <= step / 2.0, format!("max peak offset {worst:.3}° over 36 patterns (grid {step}°)"))
}

/// Measured HPBW versus 0.886·λ/L at broadside.
fn criterion_3() -> Outcome {
    let grid = angle_grid(0.0, 180.0, 0.01);
    let mut worst = 0.0f64;
    let mut asserted = 0;
    let mut wide = Vec::new();
    for freq in [S_BAND_HZ, KU_BAND_HZ] {
        let lo = RfTone::new(OMEGA_L, freq, 270.0, 0.0);
        for cm in LENGTHS_CM {
            let geo = geometry(cm / 100.0, freq);
            let theory = hpbw_theoretical(geo.length, lo.wavelength()).to_degrees();
            let pattern = pattern_single_peak(&geo, &lo, &grid).map_err(err)?;
            match measure_hpbw(&pattern) {
                Ok(m) if theory <= 30.0 => {
                    worst = worst.max(((m.width_deg - theory) / theory).abs());
                    asserted += 1;
                }
                Ok(m) => wide.push(format!("{:.2} GHz {cm} cm {:.1}°/{:.1}°", freq / 1e9, m.width_deg, theory)),
                Err(e) => wide.push(format!("{:.2} GHz {cm} cm: {e}", freq / 1e9)),
            }
        }
    }
    let ku8 = measure_hpbw(&pattern_single_peak(&geometry(0.08, KU_BAND_HZ), &RfTone::new(OMEGA_L, KU_BAND_HZ, 270.0, 0.0), &grid).map_err(err)?)
        .map_err(err)?
        .width_deg;
    check(
        asserted > 0 && worst <= 0.02 && (ku8 - 12.2).abs() < 0.1,
        format!("{asserted} cases, max rel. error {:.3}%, Ku 8 cm {ku8:.2}°; wide beams (reported) [{}]", 100.0 * worst, wide.join("; ")),
    )
}

/// Lindblad steady state on 20 random draws against the time-integration oracle.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let mhz = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| angular(rng.random_range(lo..hi) * 1e6);
    let (mut herm, mut tr, mut eig, mut res, mut ora) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let scheme = LevelScheme {
            gamma2: mhz(&mut rng, 4.0, 7.0),
            gamma3: mhz(&mut rng, 0.01, 0.05),
            gamma4: mhz(&mut rng, 0.01, 0.05),
            ..LevelScheme::default()
        };
        let rf = mhz(&mut rng, 0.0, 30.0);
        let drive = DriveParams {
            omega_p: mhz(&mut rng, 0.5, 10.0),
            omega_c: mhz(&mut rng, 0.2, 5.0),
            delta_p: mhz(&mut rng, -20.0, 20.0),
            delta_c: mhz(&mut rng, -20.0, 20.0),
            delta_l: mhz(&mut rng, -20.0, 20.0),
            omega_rf: Complex64::from_polar(rf, rng.random_range(0.0..2.0 * PI)),
        };
        let rho = steady_state(&scheme, &drive).map_err(err)?;
        herm = herm.max(rho.hermiticity_error());
        tr = tr.max((rho.trace() - 1.0).norm());
        eig = eig.min(rho.min_eigenvalue());
        let r = common::master_rhs(&scheme, &drive, &rho.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        res = res.max(r / scheme.gamma2.max(drive.omega_p));
        let oracle = common::rk4_long_time(&scheme, &drive, 50.0 / scheme.gamma3.min(scheme.gamma4));
        ora = ora.max((oracle - rho.rho).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        herm <= 1e-12 && tr <= 1e-12 && eig >= -1e-10 && res <= 1e-9 && ora <= 1e-8 && secs <= 60.0,
        format!("hermiticity {herm:.1e}, trace {tr:.1e}, min eig {eig:.1e}, residual {res:.1e}·max(γ₂,Ω_p), oracle {ora:.1e}, {secs:.1} s"),
    )
}

/// Doppler average: 64 → 128 node refinement at 10 random operating points.
fn criterion_5() -> Outcome {
    let scheme = LevelScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0005);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mhz = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| angular(rng.random_range(lo..hi) * 1e6);
        let drive = DriveParams {
            omega_p: mhz(&mut rng, 0.5, 10.0),
            omega_c: mhz(&mut rng, 0.2, 5.0),
            delta_p: mhz(&mut rng, -20.0, 20.0),
            delta_c: mhz(&mut rng, -20.0, 20.0),
            delta_l: mhz(&mut rng, -5.0, 5.0),
            omega_rf: Complex64::new(mhz(&mut rng, 0.0, 30.0), 0.0),
        };
        let a = doppler_averaged_coherence(&scheme, &drive, &DopplerSpec { node_count: 64, truncation: 4.0 }).map_err(err)?;
        let b = doppler_averaged_coherence(&scheme, &drive, &DopplerSpec { node_count: 128, truncation: 4.0 }).map_err(err)?;
        worst = worst.max((a - b).norm() / a.norm());
    }
    check(worst <= 1e-6, format!("max relative change {worst:.1e}"))
}

/// AT splitting from the two-Lorentzian fit versus Ω_l.
fn criterion_6() -> Outcome {
    let (scheme, drive, spec) = setup();
    let grid = coupling_grid(40.0 * MHZ, 201);
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for f in [20.0, 30.0] {
        let trace = eit_spectrum(&scheme, &drive.with_lo(f * MHZ), &spec, &grid).map_err(err)?;
        let fit = lorentzian_pair_fit(&trace).map_err(err)?;
        let rel = (fit.separation / (f * MHZ) - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("{f} MHz → {:.2} MHz", fit.separation / MHZ));
    }
    check(worst <= 0.1, format!("{} (max error {:.2}%)", parts.join(", "), 100.0 * worst))
}

/// Multipeak: N = 1 closed form, two-LO peak directions, power steering.
fn criterion_7() -> Outcome {
    let (scheme, drive, spec) = setup();
    let grid = angle_grid(0.0, 180.0, 1.0);
    let mut single = 0.0f64;
    for freq in [S_BAND_HZ, KU_BAND_HZ] {
        for cm in [4.0, 8.0, 10.0] {
            for theta_l in [240.0, 270.0, 300.0] {
                let geo = geometry(cm / 100.0, freq);
                let lo = RfTone::new(OMEGA_L, freq, theta_l, 0.0);
                let mp = pattern_multipeak(&geo, &LoConfiguration::single(lo), &scheme, &drive, &spec, &grid).map_err(err)?;
                let sp = pattern_single_peak(&geo, &lo, &grid).map_err(err)?;
                single = single.max(mp.pattern.gains.iter().zip(&sp.gains).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
        }
    }

    let geo = geometry(0.08, KU_BAND_HZ);
    let fine = angle_grid(0.0, 180.0, 0.5);
    let pair = |p1: f64, p2: f64| {
        LoConfiguration::new(vec![
            RfTone::new(lo_rabi_from_dbm(p1, OMEGA_L), KU_BAND_HZ, 240.0, 0.0),
            RfTone::new(lo_rabi_from_dbm(p2, OMEGA_L), KU_BAND_HZ, 300.0, 0.0),
        ])
    };
    let table = SensitivityTable::build(&scheme, &drive, &spec, 2.0 * lo_rabi_from_dbm(8.0, OMEGA_L)).map_err(err)?;
    let evaluator = MultipeakEvaluator::new(&geo, KU_BAND_HZ * 2.0 * PI / 299_792_458.0, table, &fine).map_err(err)?;
    let equal = evaluator.pattern(&pair(6.0, 6.0)).map_err(err)?.pattern;
    let peak_in = |p: &BeamPattern, lo: f64, hi: f64| {
        fine.iter().zip(&p.gains).filter(|(a, _)| (lo..hi).contains(*a)).max_by(|a, b| a.1.total_cmp(b.1)).map_or(f64::NAN, |(a, _)| *a)
    };
    let (left, right) = (peak_in(&equal, 0.0, 90.0), peak_in(&equal, 90.0, 180.1));

    let mut ratios = Vec::new();
    for p1 in [3.0, 3.75, 4.5, 5.25, 6.0] {
        let p = evaluator.pattern(&pair(p1, 9.0 - p1)).map_err(err)?.pattern;
        ratios.push(p.gain_at(120.0) / p.gain_at(60.0));
    }
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    check(
        single <= 1e-3 && (left - 60.0).abs() <= 3.0 && (right - 120.0).abs() <= 3.0 && monotone,
        format!(
            "N=1 max |Δgain| {single:.1e}; peaks {left}°/{right}°; 120°/60° height ratio over the sweep {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" → ")
        ),
    )
}

/// Interferer PSD difference between 4 and 10 cm, and BER monotone in length.
fn criterion_8() -> Outcome {
    let psd = |length: f64| -> std::result::Result<f64, String> {
        let mut s = interference_preset(length, 4000, 81);
        s.users[0].stream.tx_power_scale = 0.0;
        s.noise_density = 0.0;
        let w = channel_apply(&s).map_err(err)?;
        let st = &s.users[0].stream;
        Ok(rx_psd_db(&w, st.if_freq, st.symbol_rate * (1.0 - st.rolloff)))
    };
    let diff = psd(0.04)? - psd(0.10)?;

    let base = interference_preset(0.04, DEFAULT_BITS_PER_CELL, 8);
    let lengths = [0.04, 0.05, 0.06, 0.10];
    let sirs: Vec<f64> = (-3..=3).map(|k| 2.0 * k as f64).collect();
    let rows = run_interference_sweep(&base, &lengths, &sirs).map_err(err)?;
    let cell = |l: f64, s: f64| rows.iter().find(|r| r.cell_len_m == l && r.sir_db == s).map(|r| r.metrics);
    let mut monotone = true;
    let mut table = Vec::new();
    for s in &sirs {
        let bers: Vec<f64> = lengths.iter().filter_map(|l| cell(*l, *s)).map(|m| m.ber).collect();
        monotone &= bers.len() == lengths.len() && bers.windows(2).all(|w| w[1] <= w[0]);
        table.push(format!("{s:+.0} dB: {}", bers.iter().map(|b| format!("{b:.1e}")).collect::<Vec<_>>().join("/")));
    }
    let bits = rows.iter().map(|r| r.metrics.bits).min().unwrap_or(0);
    check(
        (diff - 10.9).abs() <= 0.5 && monotone && bits >= 100_000,
        format!("PSD 4→10 cm {diff:.2} dB; BER at L = 4/5/6/10 cm, {bits} bits/cell [{}]", table.join("; ")),
    )
}

/// Multiband misalignment PSD drops at 8 cm.
fn criterion_9() -> Outcome {
    let base = multiband_preset(40_000, 9);
    let rows = run_multiband(&base, &[vec![0.0, 0.0], vec![40.0, 20.0]]).map_err(err)?;
    let drop = |u: usize| rows[0].metrics[u].rx_psd_db - rows[1].metrics[u].rx_psd_db;
    let (s, ku) = (drop(0), drop(1));
    check((ku - 13.3).abs() <= 1.0 && (s - 6.2).abs() <= 1.0, format!("Ku 20° drop {ku:.2} dB, S 40° drop {s:.2} dB"))
}

/// Noise-free end-to-end loopback and seeded determinism.
fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let mut bits = usize::MAX;
    for order in [4, 16] {
        let mut s = multiband_preset(10_000, 10);
        s.noise_density = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + order as u64);
        for u in s.users.iter_mut() {
            u.stream = QamStream::random(order, 4e3, u.stream.if_freq, 10_000, &mut rng);
        }
        let w = channel_apply(&s).map_err(err)?;
        for u in 0..s.users.len() {
            let m = evaluate_user(&s, &w, u).map_err(err)?;
            worst = worst.max(m.ber);
            bits = bits.min(m.bits);
        }
    }
    let base = interference_preset(0.06, 8000, 1010);
    let run = || -> std::result::Result<(String, String), String> {
        let rows = run_interference_sweep(&base, &[0.04, 0.10], &[-6.0, 6.0]).map_err(err)?;
        Ok((interference_csv(&rows), channel_apply(&base).map_err(err)?.to_csv()))
    };
    let identical = run()? == run()?;
    check(worst == 0.0 && bits >= 10_000 && identical, format!("max BER {worst} over {bits} bits per stream (QPSK, 16-QAM at 24/33 kHz); repeated runs identical: {identical}"))
}

/// EIT-AT angular response is flat while the superheterodyne pattern is not.
fn criterion_11() -> Outcome {
    let (scheme, drive, spec) = setup();
    let geo = geometry(0.08, KU_BAND_HZ);
    let thetas = angle_grid(0.0, 180.0, 1.0);
    let sig = RfTone::new(10.0 * MHZ, KU_BAND_HZ, 90.0, 0.0);
    let at = eit_at_angular_response(&geo, &sig, &scheme, &drive, &spec, &thetas, &coupling_grid(40.0 * MHZ, 201)).map_err(err)?;
    let flat = 1.0 - at.pattern.gains.iter().cloned().fold(1.0, f64::min);
    let lo = RfTone::new(OMEGA_L, KU_BAND_HZ, 270.0, 0.0);
    let sp = pattern_single_peak(&geo, &lo, &thetas).map_err(err)?;
    let floor = sp.gains.iter().cloned().fold(1.0, f64::min).max(1e-300);
    let span = -10.0 * floor.log10();
    check(flat <= 0.01 && span >= 20.0, format!("EIT-AT variation {:.2e}, superheterodyne span {:.0} dB", flat, span.min(300.0)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("oracle equivalence", criterion_1),
        ("beam-steering law", criterion_2),
        ("HPBW law", criterion_3),
        ("Lindblad suite", criterion_4),
        ("Doppler convergence", criterion_5),
        ("AT-splitting cross-check", criterion_6),
        ("multipeak consistency", criterion_7),
        ("interference mitigation", criterion_8),
        ("multiband misalignment", criterion_9),
        ("comms loopback", criterion_10),
        ("EIT-AT contrast", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {name}: {detail} ({:.1} s)", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
