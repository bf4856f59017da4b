//! Simulation toolkit for beamforming with a single LO-dressed Rydberg vapor cell.
//!
//! The crate is layered bottom-up:
//!
//! * [`quantum`] solves the four-level ladder Lindblad steady state, averages it
//!   over the thermal velocity distribution and maps it to a probe susceptibility.
//! * [`aperture`] treats the cell as a continuous 1-D aperture, integrates the
//!   probe absorption along it and produces single-peak, multipeak and
//!   multiband beam patterns.
//! * [`estimation`] extracts measured quantities: beamwidths, Autler-Townes
//!   splittings and LO phases fitted to a measured pattern.
//! * [`comms`] runs QAM links through the simulated receiver.

pub mod aperture;
pub mod comms;
pub mod estimation;
pub mod numerics;
pub mod quantum;

pub use num_complex::Complex64;

/// Physical constants (SI).
pub mod consts {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
}

/// `2π·f` for a frequency given in hertz.
#[inline]
pub fn angular(freq_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_hz
}
