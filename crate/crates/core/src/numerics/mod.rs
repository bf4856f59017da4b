//! Small numerical building blocks shared by the physics modules.

pub mod chebyshev;
pub mod quadrature;
pub mod spectrum;

pub use chebyshev::Chebyshev;
pub use spectrum::{tone_amplitude, tone_phasor, welch_psd};

pub use quadrature::{simpson_weights, GK15_NODES, GK15_WEIGHTS_GAUSS, GK15_WEIGHTS_KRONROD};

/// Normalized cardinal sine `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (std::f64::consts::PI * x).powi(2) / 6.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { stop } else { start + step * i as f64 }).collect()
        }
    }
}
