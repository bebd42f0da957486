//! Large-system limits of the interference ratios and the equilibrium they
//! imply.
//!
//! As `L` and `N_c` grow with their ratio `ρ = N_c / L` fixed, `1/Z_k` and
//! `1/Γ_k` converge to deterministic values that depend only on the
//! standard-deviation profiles of the taps and of the Rake weights. The
//! limits are evaluated at finite `L` by replacing the limiting normalized
//! trace with `(1/L)·Tr`. Every trace reduces to sums over diagonal profiles
//! and suffix sums, so no `L × (L-1)` matrix is ever formed outside tests.

use serde::Serialize;

use crate::channel::{ChannelModel, ChannelRealization};
use crate::error::{Error, Result};
use crate::game::{solve_target_sinr, EfficiencyModel, GameParams, SiRatio};
use crate::rake::{si_weight, RakeConfig};

/// Fewest frames for which the limits are meaningful.
pub const MIN_FRAMES: usize = 5;

/// Per-user standard deviations of taps and Rake weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProfiles {
    /// `d_path[j][l] = sqrt(Var α_{j,l})`.
    pub d_path: Vec<Vec<f64>>,
    /// `d_rake[k][l] = sqrt(Var β_{k,l})`.
    pub d_rake: Vec<Vec<f64>>,
}

fn rake_mask(cfg: &RakeConfig, paths: usize) -> Result<Vec<bool>> {
    cfg.validate(paths)?;
    match *cfg {
        RakeConfig::ARake => Ok(vec![true; paths]),
        RakeConfig::PRake { fingers } => Ok((0..paths).map(|l| l < fingers).collect()),
        RakeConfig::SRake { .. } => Err(Error::Unsupported(
            "large-system limits need channel-independent finger selection; selective Rake is excluded".into(),
        )),
    }
}

impl VarianceProfiles {
    /// Profiles from tap standard deviations and a fixed finger selection.
    pub fn from_std(d_path: Vec<Vec<f64>>, rake: &RakeConfig) -> Result<Self> {
        let paths = d_path.first().map_or(0, Vec::len);
        if paths == 0 || d_path.iter().any(|d| d.len() != paths) {
            return Err(Error::Domain("profiles must be non-empty with a common length".into()));
        }
        if d_path.iter().flatten().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::Domain("standard deviations must be finite and non-negative".into()));
        }
        let mask = rake_mask(rake, paths)?;
        let d_rake = d_path
            .iter()
            .map(|d| d.iter().zip(&mask).map(|(&s, &on)| if on { s } else { 0.0 }).collect())
            .collect();
        Ok(VarianceProfiles { d_path, d_rake })
    }

    /// Nominal profiles of a channel model, without pathloss or shadowing
    /// (the limits are invariant to per-user scaling).
    pub fn from_model(model: &ChannelModel, params: &GameParams, rake: &RakeConfig) -> Result<Self> {
        model.validate(params)?;
        let d_path = (0..params.users)
            .map(|k| model.nominal_variances(params.paths, k).into_iter().map(f64::sqrt).collect())
            .collect();
        Self::from_std(d_path, rake)
    }

    /// Profiles a realization was drawn from.
    pub fn from_realization(real: &ChannelRealization, rake: &RakeConfig) -> Result<Self> {
        Self::from_std(real.variance_profile.clone(), rake)
    }

    pub fn users(&self) -> usize {
        self.d_path.len()
    }

    pub fn paths(&self) -> usize {
        self.d_path[0].len()
    }

    /// Dense `L × (L-1)` profile of the shifted tap matrix of user `j`,
    /// entry `(l, i)` (1-indexed) equal to `d[L + l - i] / sqrt(L)` for `i ≥ l`.
    pub fn c_path(&self, j: usize) -> Vec<Vec<f64>> {
        shifted_profile(&self.d_path[j])
    }

    pub fn c_rake(&self, k: usize) -> Vec<Vec<f64>> {
        shifted_profile(&self.d_rake[k])
    }

    fn psi_signal(&self, k: usize) -> Result<f64> {
        let l = self.paths() as f64;
        let v: f64 = self.d_path[k].iter().zip(&self.d_rake[k]).map(|(a, b)| a * b).sum::<f64>() / l;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Degenerate(format!("user {k}: Rake profile does not overlap the channel profile")))
        }
    }
}

fn shifted_profile(d: &[f64]) -> Vec<Vec<f64>> {
    let l = d.len();
    let s = (l as f64).sqrt();
    let mut m = vec![vec![0.0; l.saturating_sub(1)]; l];
    for row in 1..=l {
        for col in row..l {
            m[row - 1][col - 1] = d[l + row - col - 1] / s;
        }
    }
    m
}

/// `suffix[l] = Σ_{m>l} v[m]²`.
fn suffix_energy(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut acc = 0.0;
    for l in (0..v.len()).rev() {
        out[l] = acc;
        acc += v[l] * v[l];
    }
    out
}

/// `(1/L²)·Σ_l a[l]²·Σ_{m>l} b[m]²`.
fn shifted_trace(a: &[f64], b_suffix: &[f64]) -> f64 {
    let l = a.len() as f64;
    a.iter().zip(b_suffix).map(|(x, s)| x * x * s).sum::<f64>() / (l * l)
}

/// Limit of `1/Z_k` for every user.
pub fn mai_ratio_limit(profiles: &VarianceProfiles, params: &GameParams) -> Result<Vec<f64>> {
    let k_users = profiles.users();
    let n = params.processing_gain() as f64;
    let psi: Vec<f64> = (0..k_users).map(|k| profiles.psi_signal(k)).collect::<Result<_>>()?;
    let path_suffix: Vec<Vec<f64>> = profiles.d_path.iter().map(|d| suffix_energy(d)).collect();
    let rake_suffix: Vec<Vec<f64>> = profiles.d_rake.iter().map(|d| suffix_energy(d)).collect();
    Ok((0..k_users)
        .map(|k| {
            let mut acc = 0.0;
            for j in (0..k_users).filter(|&j| j != k) {
                let num = shifted_trace(&profiles.d_path[j], &rake_suffix[k])
                    + shifted_trace(&profiles.d_rake[k], &path_suffix[j]);
                acc += num / (psi[j] * psi[k]);
            }
            acc / n
        })
        .collect())
}

/// Limit of `1/Γ_k` for every user.
pub fn si_ratio_limit(profiles: &VarianceProfiles, params: &GameParams) -> Result<Vec<f64>> {
    let l = profiles.paths();
    let lf = l as f64;
    let n = params.processing_gain() as f64;
    (0..profiles.users())
        .map(|k| {
            let psi = profiles.psi_signal(k)?;
            let (d, dr) = (&profiles.d_path[k], &profiles.d_rake[k]);
            let mut acc = 0.0;
            for lag in 1..l {
                let mut inner = 0.0;
                for a in 0..l - lag {
                    let theta = d[a] * dr[a + lag] + dr[a] * d[a + lag];
                    inner += theta * theta;
                }
                acc += si_weight(lag, params.chips) * inner;
            }
            Ok(acc / (lf * lf) / (n * psi * psi))
        })
        .collect()
}

/// Self-interference coefficient `ν(ρ)` of an All-Rake on a flat profile.
pub fn nu(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("load factor must be positive, got {rho}")));
    }
    Ok(if rho <= 1.0 {
        2.0 / 3.0 * (3.0 - 3.0 * rho + rho * rho)
    } else {
        2.0 / (3.0 * rho)
    })
}

/// Equilibrium predicted by the flat-profile All-Rake limits.
#[derive(Debug, Clone, Serialize)]
pub struct LsaPrediction {
    /// `(K - 1)/N` for every user.
    pub z_inv_limit: Vec<f64>,
    /// `ν(ρ)/N` for every user.
    pub gamma_inv_limit: Vec<f64>,
    pub nu: f64,
    pub rho: f64,
    /// `γ*` of a user without self-interference.
    pub target_sinr: f64,
    /// `γ*·(K - 1 + ν)/N`; the prediction needs it below 1.
    pub load: f64,
    pub feasible: bool,
    /// Absent when infeasible.
    pub predicted_powers: Option<Vec<f64>>,
    pub predicted_utilities: Option<Vec<f64>>,
    /// Smallest admissible frame count, at least [`MIN_FRAMES`].
    pub min_nf: usize,
    /// `γ*·(K - 1 + ν)/N_c` before rounding.
    pub min_nf_unrounded: f64,
}

pub fn predict_equilibrium(params: &GameParams, f: &EfficiencyModel, h_sp: &[f64]) -> Result<LsaPrediction> {
    if h_sp.len() != params.users {
        return Err(Error::Domain(format!("expected {} signal gains, got {}", params.users, h_sp.len())));
    }
    let k_users = params.users;
    let n = params.processing_gain() as f64;
    let rho = params.load_factor();
    let nu = nu(rho)?;
    let g = solve_target_sinr(f, SiRatio::Unbounded)?;
    let crowd = k_users as f64 - 1.0 + nu;
    let load = g * crowd / n;
    let feasible = load < 1.0;
    let min_nf_unrounded = g * crowd / params.chips as f64;
    let min_nf = (min_nf_unrounded.ceil() as usize).max(MIN_FRAMES);
    let sigma2 = params.noise_var_w;
    let (predicted_powers, predicted_utilities) = if feasible {
        let fg = f.value(g)?;
        let scale = params.goodput_scale();
        (
            Some(h_sp.iter().map(|h| sigma2 * g / (h * (1.0 - load))).collect()),
            Some(h_sp.iter().map(|h| h * scale * fg * (1.0 - load) / (sigma2 * g)).collect()),
        )
    } else {
        (None, None)
    };
    Ok(LsaPrediction {
        z_inv_limit: vec![(k_users as f64 - 1.0) / n; k_users],
        gamma_inv_limit: vec![nu / n; k_users],
        nu,
        rho,
        target_sinr: g,
        load,
        feasible,
        predicted_powers,
        predicted_utilities,
        min_nf,
        min_nf_unrounded,
    })
}
