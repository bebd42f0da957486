//! Random tapped-delay-line channels.
//!
//! Tap `l` of user `k` is a zero-mean real Gaussian whose variance is the
//! power-delay-profile value at `l`, times a per-user base variance, times a
//! power-law pathloss at the user's distance, times an optional lognormal
//! shadowing factor. The large-system limits only involve second-order
//! statistics, and those are controlled exactly by this model. The analysis
//! carries over to complex taps; the simulator stays real-valued (BPSK
//! baseband).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameParams;
use crate::rng::trial_rng;

/// Shape of the per-tap variance profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerDelayProfile {
    /// Every tap has unit variance.
    Flat,
    /// Variance `c·e^{-decay·l}` for tap `l = 0, 1, …`, with `c` chosen so
    /// the profile sums to `L` like the flat one.
    Exponential { decay: f64 },
}

impl PowerDelayProfile {
    /// Tap variances for `paths` taps.
    pub fn variances(&self, paths: usize) -> Vec<f64> {
        match *self {
            PowerDelayProfile::Flat => vec![1.0; paths],
            PowerDelayProfile::Exponential { decay } => {
                let raw: Vec<f64> = (0..paths).map(|l| (-decay * l as f64).exp()).collect();
                let c = paths as f64 / raw.iter().sum::<f64>();
                raw.into_iter().map(|v| c * v).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    #[serde(default = "flat")]
    pub pdp: PowerDelayProfile,
    /// Standard deviation of the lognormal shadowing in dB; 0 disables it.
    #[serde(default)]
    pub shadowing_sigma_db: f64,
    /// Pathloss exponent `n` of `d^{-n}` (distance in meters); 0 disables it.
    #[serde(default = "default_pathloss")]
    pub pathloss_exponent: f64,
    /// Users are placed uniformly at distances in `[min, max]` meters.
    #[serde(default = "default_range")]
    pub distance_range_m: (f64, f64),
    /// Per-user base variance `σ²_k`; 1 for every user when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_user_variance: Option<Vec<f64>>,
}

fn flat() -> PowerDelayProfile {
    PowerDelayProfile::Flat
}

fn default_pathloss() -> f64 {
    2.0
}

fn default_range() -> (f64, f64) {
    (3.0, 20.0)
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            pdp: PowerDelayProfile::Flat,
            shadowing_sigma_db: 0.0,
            pathloss_exponent: default_pathloss(),
            distance_range_m: default_range(),
            per_user_variance: None,
        }
    }
}

impl ChannelModel {
    /// Unit-variance flat profile with no pathloss or shadowing.
    pub fn unit_flat() -> Self {
        ChannelModel {
            pathloss_exponent: 0.0,
            ..ChannelModel::default()
        }
    }

    pub fn validate(&self, params: &GameParams) -> Result<()> {
        if let PowerDelayProfile::Exponential { decay } = self.pdp {
            if !(decay > 0.0 && decay.is_finite()) {
                return Err(Error::config("channel.pdp.decay", "must be positive and finite"));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite()) {
            return Err(Error::config("channel.shadowing_sigma_db", "must be non-negative"));
        }
        if !(self.pathloss_exponent >= 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::config("channel.pathloss_exponent", "must be non-negative"));
        }
        let (lo, hi) = self.distance_range_m;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config(
                "channel.distance_range_m",
                "needs 0 < min <= max < inf",
            ));
        }
        if let Some(v) = &self.per_user_variance {
            if v.len() != params.users {
                return Err(Error::config(
                    "channel.per_user_variance",
                    format!("has {} entries for {} users", v.len(), params.users),
                ));
            }
            if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::config("channel.per_user_variance", "entries must be positive"));
            }
        }
        Ok(())
    }

    fn base_variance(&self, k: usize) -> f64 {
        self.per_user_variance.as_ref().map_or(1.0, |v| v[k])
    }

    /// Tap variances of user `k` before pathloss and shadowing.
    pub fn nominal_variances(&self, paths: usize, k: usize) -> Vec<f64> {
        let base = self.base_variance(k);
        self.pdp.variances(paths).into_iter().map(|v| base * v).collect()
    }
}

/// One draw of every user's channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization {
    /// Fading coefficients `α_k`, one vector of `L` taps per user.
    pub alpha: Vec<Vec<f64>>,
    /// Chip-level delay `Δ_k ∈ {0, …, N-1}`.
    pub delay_chips: Vec<usize>,
    pub distance_m: Vec<f64>,
    /// Standard deviation of every tap used for the draw.
    pub variance_profile: Vec<Vec<f64>>,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.alpha.len()
    }

    pub fn paths(&self) -> usize {
        self.alpha.first().map_or(0, Vec::len)
    }
}

/// Channel gain `h_k = ‖α_k‖²`.
pub fn channel_gain(real: &ChannelRealization, k: usize) -> f64 {
    real.alpha[k].iter().map(|a| a * a).sum()
}

/// Draws a realization from `rng`.
///
/// All fading taps are drawn before the delays, so two scenarios differing
/// only in `N` see the same fading for the same stream.
pub fn draw_realization<R: Rng + ?Sized>(
    model: &ChannelModel,
    params: &GameParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    model.validate(params)?;
    if params.paths == 0 || params.users == 0 {
        return Err(Error::config("params", "need at least one user and one path"));
    }
    let profile = model.pdp.variances(params.paths);
    let (d_lo, d_hi) = model.distance_range_m;
    let mut alpha = Vec::with_capacity(params.users);
    let mut distance_m = Vec::with_capacity(params.users);
    let mut variance_profile = Vec::with_capacity(params.users);
    for k in 0..params.users {
        let d = if d_hi > d_lo { rng.random_range(d_lo..=d_hi) } else { d_lo };
        let z: f64 = StandardNormal.sample(rng);
        let shadow = 10f64.powf(model.shadowing_sigma_db * z / 10.0);
        let scale = model.base_variance(k) * d.powf(-model.pathloss_exponent) * shadow;
        let std: Vec<f64> = profile.iter().map(|v| (v * scale).sqrt()).collect();
        let taps = loop {
            let taps: Vec<f64> = std
                .iter()
                .map(|s| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect();
            if taps.iter().any(|&a| a != 0.0) {
                break taps;
            }
        };
        alpha.push(taps);
        distance_m.push(d);
        variance_profile.push(std);
    }
    let n = params.processing_gain();
    let delay_chips = (0..params.users).map(|_| rng.random_range(0..n)).collect();
    Ok(ChannelRealization {
        alpha,
        delay_chips,
        distance_m,
        variance_profile,
    })
}

/// Realization fully determined by `(seed, trial)`.
pub fn draw_realization_seeded(
    model: &ChannelModel,
    params: &GameParams,
    seed: u64,
    trial: u64,
) -> Result<ChannelRealization> {
    draw_realization(model, params, &mut trial_rng(seed, trial))
}
