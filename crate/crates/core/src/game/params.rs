use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of one network scenario.
///
/// Powers are in watts, the rate in bits per second. Every user shares the
/// same rate, packet format and maximum power; the minimum power is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    /// Number of users `K`.
    pub users: usize,
    /// Frames per symbol `N_f`.
    pub frames: usize,
    /// Chip positions per frame `N_c`.
    pub chips: usize,
    /// Resolvable channel paths `L`.
    pub paths: usize,
    /// Total bits per packet `M`.
    #[serde(default = "defaults::packet_bits")]
    pub packet_bits: u32,
    /// Information bits per packet `D`.
    #[serde(default = "defaults::packet_bits")]
    pub info_bits: u32,
    #[serde(default = "defaults::rate")]
    pub rate_bps: f64,
    #[serde(default = "defaults::noise")]
    pub noise_var_w: f64,
    #[serde(default = "defaults::p_max")]
    pub p_max_w: f64,
    #[serde(default)]
    pub p_min_w: f64,
}

pub(crate) mod defaults {
    pub fn packet_bits() -> u32 {
        100
    }
    pub fn rate() -> f64 {
        1e5
    }
    pub fn noise() -> f64 {
        5e-16
    }
    pub fn p_max() -> f64 {
        1e-6
    }
}

/// Below this many frames the chip-synchronous SINR model loses accuracy.
pub const MIN_ACCURATE_FRAMES: usize = 5;

impl GameParams {
    /// Scenario with the reference numerical setting: `D = M = 100`,
    /// `R = 100 kb/s`, `σ² = 5e-16 W`, `p_max = 1 µW`.
    pub fn with_defaults(users: usize, frames: usize, chips: usize, paths: usize) -> Self {
        GameParams {
            users,
            frames,
            chips,
            paths,
            packet_bits: defaults::packet_bits(),
            info_bits: defaults::packet_bits(),
            rate_bps: defaults::rate(),
            noise_var_w: defaults::noise(),
            p_max_w: defaults::p_max(),
            p_min_w: 0.0,
        }
    }

    /// Processing gain `N = N_f · N_c`.
    pub fn processing_gain(&self) -> usize {
        self.frames * self.chips
    }

    /// Load factor `ρ = N_c / L`.
    pub fn load_factor(&self) -> f64 {
        self.chips as f64 / self.paths as f64
    }

    /// `(D / M) · R`, the goodput scale of the utility.
    pub fn goodput_scale(&self) -> f64 {
        self.info_bits as f64 / self.packet_bits as f64 * self.rate_bps
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("users", self.users),
            ("frames", self.frames),
            ("chips", self.chips),
            ("paths", self.paths),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.packet_bits < 2 {
            return Err(Error::config(
                "packet_bits",
                "must be at least 2 so the efficiency function is flat at the origin",
            ));
        }
        if self.info_bits == 0 || self.info_bits > self.packet_bits {
            return Err(Error::config("info_bits", "must lie in [1, packet_bits]"));
        }
        if !(self.rate_bps > 0.0 && self.rate_bps.is_finite()) {
            return Err(Error::config("rate_bps", "must be positive and finite"));
        }
        if !(self.noise_var_w > 0.0 && self.noise_var_w.is_finite()) {
            return Err(Error::config("noise_var_w", "must be positive and finite"));
        }
        if !(self.p_max_w > 0.0 && self.p_max_w.is_finite()) {
            return Err(Error::config("p_max_w", "must be positive and finite"));
        }
        if self.p_min_w != 0.0 {
            return Err(Error::config("p_min_w", "only a zero minimum power is supported"));
        }
        if self.frames < MIN_ACCURATE_FRAMES {
            log::warn!(
                "frames = {} is below {}; the SINR approximation is coarse in this regime",
                self.frames,
                MIN_ACCURATE_FRAMES
            );
        }
        Ok(())
    }
}
