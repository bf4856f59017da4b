//! QAM links through the aperture: modulation, channel, superheterodyne
//! receiver and link metrics.

mod channel;
mod metrics;
mod qam;
mod receiver;
mod scenarios;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aperture::ApertureError;

pub use channel::*;
pub use metrics::*;
pub use qam::*;
pub use receiver::*;
pub use scenarios::*;

#[derive(Debug, Error)]
pub enum CommsError {
    #[error(transparent)]
    Aperture(#[from] ApertureError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample rate {sample_rate} Hz below the required {required} Hz")]
    AliasingRisk { sample_rate: f64, required: f64 },
    #[error("receiver failed to lock (metric {metric:.4} < {threshold:.4})")]
    LockFailure { metric: f64, threshold: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, CommsError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CommsError::InvalidParameter(msg.into()))
}

/// Uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|n| n as f64 / self.sample_rate).collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// CSV with header `t_s,delta_p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,delta_p\n");
        for (n, v) in self.samples.iter().enumerate() {
            out.push_str(&format!("{:e},{:e}\n", n as f64 / self.sample_rate, v));
        }
        out
    }
}
