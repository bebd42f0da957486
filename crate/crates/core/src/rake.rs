//! Rake combining and the per-realization gains entering the SINR.
//!
//! With weights `β_k = G·α_k`, the useful gain is `h_sp[k] = β_kᵀα_k`. The
//! self-interference and multiple-access gains are built from partial
//! cross-correlations between weight and tap vectors: the upper-shift
//! matrices of a tap vector `x` satisfy `(X_shiftᵀ y)_c = Σ_i x[m+i]·y[i]`
//! with lag `m = L - c`, so both gains reduce to sums over lags and the
//! shift matrices are never formed.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::game::{GameParams, SiRatio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RakeConfig {
    /// All-Rake: one finger per path, `G = I`.
    ARake,
    /// Partial Rake: the first `fingers` paths.
    PRake { fingers: usize },
    /// Selective Rake: the `fingers` strongest paths, ties to the lower index.
    SRake { fingers: usize },
}

impl RakeConfig {
    pub fn validate(&self, paths: usize) -> Result<()> {
        match *self {
            RakeConfig::ARake => Ok(()),
            RakeConfig::PRake { fingers } | RakeConfig::SRake { fingers } => {
                if fingers == 0 || fingers > paths {
                    Err(Error::config(
                        "rake.fingers",
                        format!("{fingers} fingers for {paths} paths (need 1..={paths})"),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Whether the finger selection is fixed independently of the channel.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, RakeConfig::SRake { .. })
    }
}

/// Combining weights of user `k`.
pub fn build_weights(real: &ChannelRealization, cfg: &RakeConfig, k: usize) -> Result<Vec<f64>> {
    let alpha = &real.alpha[k];
    cfg.validate(alpha.len())?;
    Ok(weights_for(alpha, cfg))
}

fn weights_for(alpha: &[f64], cfg: &RakeConfig) -> Vec<f64> {
    match *cfg {
        RakeConfig::ARake => alpha.to_vec(),
        RakeConfig::PRake { fingers } => alpha
            .iter()
            .enumerate()
            .map(|(l, &a)| if l < fingers { a } else { 0.0 })
            .collect(),
        RakeConfig::SRake { fingers } => {
            let mut order: Vec<usize> = (0..alpha.len()).collect();
            // stable: equal magnitudes keep ascending tap order
            order.sort_by(|&a, &b| alpha[b].abs().total_cmp(&alpha[a].abs()));
            let mut beta = vec![0.0; alpha.len()];
            for &l in &order[..fingers] {
                beta[l] = alpha[l];
            }
            beta
        }
    }
}

/// Gains of one realization under one Rake configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub h_sp: Vec<f64>,
    pub h_si: Vec<f64>,
    /// `h_mai[k][j]`: interference of user `j` at the Rake of user `k`;
    /// the diagonal is zero.
    pub h_mai: Vec<Vec<f64>>,
    /// `Γ_k = h_sp[k] / h_si[k]`.
    pub gamma_cap: Vec<SiRatio>,
    /// `1/Z_k = Σ_{j≠k} h_mai[k][j] / h_sp[j]`.
    pub z_inv: Vec<f64>,
}

impl GainSet {
    /// Assembles a gain set from its three primary gains.
    pub fn from_parts(h_sp: Vec<f64>, h_si: Vec<f64>, mut h_mai: Vec<Vec<f64>>) -> Result<Self> {
        let k_users = h_sp.len();
        if h_si.len() != k_users || h_mai.len() != k_users || h_mai.iter().any(|r| r.len() != k_users) {
            return Err(Error::Domain("gain dimensions disagree".into()));
        }
        for (k, &h) in h_sp.iter().enumerate() {
            if !(h > 0.0) {
                return Err(Error::Degenerate(format!(
                    "user {k}: signal gain {h:e} is not positive (weights anti-correlated with the channel)"
                )));
            }
        }
        for (k, row) in h_mai.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        let gamma_cap = h_sp
            .iter()
            .zip(&h_si)
            .map(|(&sp, &si)| SiRatio::from_gains(sp, si))
            .collect();
        let z_inv = h_mai
            .iter()
            .enumerate()
            .map(|(k, row)| {
                row.iter()
                    .zip(&h_sp)
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, (m, sp))| m / sp)
                    .sum()
            })
            .collect();
        Ok(GainSet {
            h_sp,
            h_si,
            h_mai,
            gamma_cap,
            z_inv,
        })
    }

    pub fn users(&self) -> usize {
        self.h_sp.len()
    }

    /// Gains of the same realization with the processing gain multiplied by
    /// `factor` at fixed chips per frame (only the frame count changes).
    pub fn with_processing_gain_scaled(&self, factor: f64) -> GainSet {
        let inv = 1.0 / factor;
        let h_si = self.h_si.iter().map(|x| x * inv).collect();
        let h_mai = self
            .h_mai
            .iter()
            .map(|r| r.iter().map(|x| x * inv).collect())
            .collect();
        GainSet::from_parts(self.h_sp.clone(), h_si, h_mai).expect("scaling preserves validity")
    }
}

/// `Σ_i a[i]·b[i]` over the common length.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Partial correlation `Σ_{i=0}^{L-m-1} u[m+i]·v[i]` at lag `m ≥ 1`.
#[inline]
fn lagged(u: &[f64], v: &[f64], m: usize) -> f64 {
    dot(&u[m..], &v[..v.len() - m])
}

/// `Σ_m (lagged(u, v, m)² + lagged(v, u, m)²) + (uᵀv)²`: the numerator of the
/// cross gain before normalization.
fn cross_energy(u: &[f64], v: &[f64]) -> f64 {
    let l = u.len();
    let mut acc = dot(u, v).powi(2);
    for m in 1..l {
        acc += lagged(u, v, m).powi(2) + lagged(v, u, m).powi(2);
    }
    acc
}

/// Self-interference weight `φ_c² = min(L - c, N_c) / N_c`, written in terms
/// of the lag `m = L - c`.
#[inline]
pub fn si_weight(lag: usize, chips: usize) -> f64 {
    lag.min(chips) as f64 / chips as f64
}

pub fn compute_gains(real: &ChannelRealization, cfg: &RakeConfig, params: &GameParams) -> Result<GainSet> {
    let k_users = real.users();
    let paths = real.paths();
    if k_users == 0 || paths == 0 {
        return Err(Error::Domain("empty realization".into()));
    }
    cfg.validate(paths)?;
    let n = params.processing_gain() as f64;
    if !(n >= 1.0) {
        return Err(Error::config("params", "processing gain must be at least 1"));
    }
    let chips = params.chips;
    let betas: Vec<Vec<f64>> = real.alpha.iter().map(|a| weights_for(a, cfg)).collect();

    let h_sp: Vec<f64> = betas.iter().zip(&real.alpha).map(|(b, a)| dot(b, a)).collect();
    if let Some(k) = h_sp.iter().position(|&h| !(h > 0.0)) {
        return Err(Error::Degenerate(format!(
            "user {k}: signal gain {:e} is not positive",
            h_sp[k]
        )));
    }

    let h_si = (0..k_users)
        .map(|k| {
            let (a, b) = (&real.alpha[k], &betas[k]);
            let mut acc = 0.0;
            for m in 1..paths {
                let v = lagged(b, a, m) + lagged(a, b, m);
                acc += si_weight(m, chips) * v * v;
            }
            acc / (n * h_sp[k])
        })
        .collect();

    let h_mai = (0..k_users)
        .map(|k| {
            (0..k_users)
                .map(|j| {
                    if j == k {
                        0.0
                    } else {
                        cross_energy(&betas[k], &real.alpha[j]) / (n * h_sp[k])
                    }
                })
                .collect()
        })
        .collect();

    GainSet::from_parts(h_sp, h_si, h_mai)
}
