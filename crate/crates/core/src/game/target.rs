use std::collections::HashMap;
use std::sync::RwLock;

use super::efficiency::EfficiencyModel;
use super::root;
use crate::error::{Error, Result};

/// Ratio `Γ = h_sp / h_si` between the useful gain and the self-interference
/// gain of a user.
///
/// A channel without self-interference (a single path) has no finite cap;
/// that case is carried symbolically so every `1 - γ/Γ` factor is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiRatio {
    Finite(f64),
    Unbounded,
}

impl SiRatio {
    pub fn from_gains(h_sp: f64, h_si: f64) -> Self {
        if h_si == 0.0 {
            SiRatio::Unbounded
        } else {
            SiRatio::Finite(h_sp / h_si)
        }
    }

    /// `1/Γ`, zero when unbounded.
    pub fn inverse(&self) -> f64 {
        match *self {
            SiRatio::Finite(g) => 1.0 / g,
            SiRatio::Unbounded => 0.0,
        }
    }

    /// `1 - γ/Γ`.
    pub fn headroom(&self, gamma: f64) -> f64 {
        match *self {
            SiRatio::Finite(g) => 1.0 - gamma / g,
            SiRatio::Unbounded => 1.0,
        }
    }

    /// `Γ` as a float, `+∞` when unbounded.
    pub fn as_f64(&self) -> f64 {
        match *self {
            SiRatio::Finite(g) => g,
            SiRatio::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, SiRatio::Unbounded)
    }
}

const BRACKET_EPS: f64 = 1e-12;
/// Absolute tolerance on the returned SINR.
pub const TARGET_TOL: f64 = 1e-10;
const MAX_UNBOUNDED_BRACKET: f64 = 1e6;

/// Left-hand side minus right-hand side of the stationarity condition
/// `f'(γ)·γ·(1 - γ/Γ) = f(γ)`, divided through by `f(γ)`.
///
/// Positive below the optimal SINR, negative above it.
pub fn stationarity(f: &EfficiencyModel, cap: SiRatio, gamma: f64) -> f64 {
    gamma * cap.headroom(gamma) * f.log_derivative(gamma) - 1.0
}

fn stationarity_slope(f: &EfficiencyModel, cap: SiRatio, gamma: f64) -> f64 {
    let h = cap.headroom(gamma);
    let dh = -cap.inverse();
    (h + gamma * dh) * f.log_derivative(gamma) + gamma * h * f.log_derivative_slope(gamma)
}

/// Bracket `(lo, hi)` containing the unique positive stationary SINR.
pub fn target_bracket(f: &EfficiencyModel, cap: SiRatio) -> Result<(f64, f64)> {
    let lo = BRACKET_EPS;
    let hi = match cap {
        SiRatio::Finite(g) => {
            if !(g > 0.0) {
                return Err(Error::Domain(format!("SI ratio must be positive, got {g}")));
            }
            g * (1.0 - BRACKET_EPS)
        }
        SiRatio::Unbounded => {
            let mut hi = 1.0;
            while stationarity(f, cap, hi) >= 0.0 {
                hi *= 2.0;
                if hi > MAX_UNBOUNDED_BRACKET {
                    return Err(Error::Solver("no sign change below 1e6".into()));
                }
            }
            hi
        }
    };
    let (g_lo, g_hi) = (stationarity(f, cap, lo), stationarity(f, cap, hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Solver(format!(
            "stationarity condition does not change sign on ({lo:e}, {hi:e}): {g_lo:e}, {g_hi:e}"
        )));
    }
    Ok((lo, hi))
}

/// Utility-maximizing SINR `γ*` for a user whose self-interference ratio is
/// `cap`; always in `(0, Γ)`.
pub fn solve_target_sinr(f: &EfficiencyModel, cap: SiRatio) -> Result<f64> {
    let (lo, hi) = target_bracket(f, cap)?;
    root::safeguarded_newton(
        |g| stationarity(f, cap, g),
        |g| stationarity_slope(f, cap, g),
        lo,
        hi,
        TARGET_TOL,
        500,
    )
    .ok_or_else(|| Error::Solver("lost the bracket".into()))
}

/// Concurrent memo of `γ*(Γ)` for one efficiency model.
#[derive(Debug)]
pub struct TargetSinrCache {
    model: EfficiencyModel,
    entries: RwLock<HashMap<u64, f64>>,
}

impl TargetSinrCache {
    pub fn new(model: EfficiencyModel) -> Self {
        TargetSinrCache {
            model,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &EfficiencyModel {
        &self.model
    }

    pub fn get(&self, cap: SiRatio) -> Result<f64> {
        let key = match cap {
            SiRatio::Finite(g) => g.to_bits(),
            SiRatio::Unbounded => f64::INFINITY.to_bits(),
        };
        if let Some(v) = self.entries.read().expect("cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = solve_target_sinr(&self.model, cap)?;
        self.entries.write().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Decibels of a linear power ratio.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
