use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Packet-success surrogate `f(γ)` entering the utility.
///
/// Any model must be increasing and S-shaped with `f(0) = 0`, `f(∞) = 1` and
/// `f'(0) = 0`; the target-SINR solver relies on all four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EfficiencyModel {
    /// `f(γ) = (1 - e^{-γ/2})^M` for BPSK with `M`-bit packets.
    PacketExp { bits: u32 },
}

impl EfficiencyModel {
    pub fn packet_exp(bits: u32) -> Self {
        EfficiencyModel::PacketExp { bits }
    }

    pub fn value(&self, gamma: f64) -> Result<f64> {
        if gamma < 0.0 || gamma.is_nan() {
            return Err(Error::Domain(format!("SINR must be non-negative, got {gamma}")));
        }
        Ok(self.value_unchecked(gamma))
    }

    pub(crate) fn value_unchecked(&self, gamma: f64) -> f64 {
        match *self {
            EfficiencyModel::PacketExp { bits } => (-(-gamma / 2.0).exp_m1()).powi(bits as i32),
        }
    }

    /// `f'(γ)`.
    pub fn derivative(&self, gamma: f64) -> f64 {
        match *self {
            EfficiencyModel::PacketExp { bits } => {
                let m = bits as f64;
                let e = (-gamma / 2.0).exp();
                m * (-(-gamma / 2.0).exp_m1()).powi(bits as i32 - 1) * e / 2.0
            }
        }
    }

    /// `f'(γ) / f(γ)`, finite for `γ > 0`.
    ///
    /// Working with the ratio keeps the stationarity condition well scaled
    /// near the origin, where both `f` and `f'` underflow.
    pub fn log_derivative(&self, gamma: f64) -> f64 {
        match *self {
            EfficiencyModel::PacketExp { bits } => bits as f64 / (2.0 * (gamma / 2.0).exp_m1()),
        }
    }

    /// `d/dγ [f'(γ) / f(γ)]`.
    pub fn log_derivative_slope(&self, gamma: f64) -> f64 {
        match *self {
            EfficiencyModel::PacketExp { bits } => {
                let em1 = (gamma / 2.0).exp_m1();
                -(bits as f64) * (em1 + 1.0) / (4.0 * em1 * em1)
            }
        }
    }
}
