//! Utility model, SINR, best responses and the feasibility of the target
//! SINRs for one set of gains.

mod efficiency;
mod params;
pub mod root;
mod target;

pub use efficiency::EfficiencyModel;
pub use params::{GameParams, MIN_ACCURATE_FRAMES};
pub use target::{
    from_db, solve_target_sinr, stationarity, target_bracket, to_db, SiRatio, TargetSinrCache, TARGET_TOL,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rake::GainSet;

/// Energy efficiency `(D/M)·R·f(γ)/p` in bits per joule; zero at `p = 0`.
pub fn utility(params: &GameParams, f: &EfficiencyModel, power: f64, gamma: f64) -> Result<f64> {
    if power < 0.0 {
        return Err(Error::Domain(format!("power must be non-negative, got {power}")));
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    Ok(params.goodput_scale() * f.value(gamma)? / power)
}

/// `Σ_{j≠k} h_mai[k][j]·p_j + σ²`.
pub fn interference_plus_noise(gains: &GainSet, powers: &[f64], noise_var: f64, k: usize) -> f64 {
    let row = &gains.h_mai[k];
    let mut acc = 0.0;
    for (j, (&h, &p)) in row.iter().zip(powers).enumerate() {
        if j != k {
            acc += h * p;
        }
    }
    acc + noise_var
}

/// Rake-output SINR of user `k`.
pub fn sinr(gains: &GainSet, powers: &[f64], noise_var: f64, k: usize) -> f64 {
    let p = powers[k];
    let signal = gains.h_sp[k] * p;
    signal / (gains.h_si[k] * p + interference_plus_noise(gains, powers, noise_var, k))
}

pub fn sinrs(gains: &GainSet, powers: &[f64], noise_var: f64) -> Vec<f64> {
    (0..gains.users()).map(|k| sinr(gains, powers, noise_var, k)).collect()
}

/// Utility-maximizing SINR of every user.
pub fn target_sinrs(gains: &GainSet, f: &EfficiencyModel) -> Result<Vec<f64>> {
    gains.gamma_cap.iter().map(|&cap| solve_target_sinr(f, cap)).collect()
}

/// Power reaching `target` against the current interference, ignoring `p_max`.
pub fn unconstrained_response(gains: &GainSet, powers: &[f64], noise_var: f64, k: usize, target: f64) -> f64 {
    let i_n = interference_plus_noise(gains, powers, noise_var, k);
    target * i_n / (gains.h_sp[k] * gains.gamma_cap[k].headroom(target))
}

/// Best response of user `k` to the other users' powers (`powers[k]` is
/// ignored), clipped at `p_max`.
pub fn best_response(
    gains: &GainSet,
    powers: &[f64],
    params: &GameParams,
    f: &EfficiencyModel,
    k: usize,
) -> Result<f64> {
    let target = solve_target_sinr(f, gains.gamma_cap[k])?;
    Ok(unconstrained_response(gains, powers, params.noise_var_w, k, target).min(params.p_max_w))
}

/// Powers at which every user `k` reaches exactly `targets[k]`.
///
/// Solves `(I - D·H) p = σ²·D·1` with `D = diag(γ_k / (h_sp[k](1 - γ_k/Γ_k)))`
/// and `H` the cross gains. A componentwise positive solution exists exactly
/// when the targets are jointly reachable, and it is then the smallest power
/// vector reaching them.
pub fn powers_for_targets(gains: &GainSet, targets: &[f64], noise_var: f64) -> Result<Vec<f64>> {
    let k_users = gains.users();
    if targets.len() != k_users {
        return Err(Error::Domain(format!(
            "expected {k_users} targets, got {}",
            targets.len()
        )));
    }
    let mut scale = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let headroom = gains.gamma_cap[k].headroom(targets[k]);
        if !(headroom > 0.0) {
            return Err(Error::Infeasible(format!(
                "user {k}: target {} is not below its SI ratio {}",
                targets[k],
                gains.gamma_cap[k].as_f64()
            )));
        }
        scale.push(targets[k] / (gains.h_sp[k] * headroom));
    }
    let a = DMatrix::from_fn(k_users, k_users, |r, c| {
        if r == c {
            1.0
        } else {
            -scale[r] * gains.h_mai[r][c]
        }
    });
    let b = DVector::from_iterator(k_users, scale.iter().map(|d| d * noise_var));
    let p = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Infeasible("singular interference system".into()))?;
    if p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Infeasible(
            "targets are not jointly reachable (non-positive power solution)".into(),
        ));
    }
    Ok(p.iter().copied().collect())
}

/// Outcome of the feasibility test for the users' optimal SINRs.
#[derive(Debug, Clone, Serialize)]
pub struct Feasibility {
    /// `γ*_k` of every user.
    pub targets: Vec<f64>,
    /// Per-user load `γ*_k·(1/Γ_k + 1/Z_k)`; the test requires every entry < 1.
    pub load: Vec<f64>,
    /// Per-user condition holds for every user.
    pub feasible: bool,
    /// Closed-form minimum powers, derived assuming `h_sp[k]·p_k` is equal
    /// across users. Present when `feasible`.
    pub min_powers: Option<Vec<f64>>,
    /// Exact minimum powers reaching every `γ*_k` (solution of the coupled
    /// linear system), when one exists.
    pub exact_min_powers: Option<Vec<f64>>,
}

impl Feasibility {
    /// Exact minimum powers exist and respect `p_max`.
    pub fn reachable_within(&self, p_max: f64) -> bool {
        self.exact_min_powers
            .as_ref()
            .is_some_and(|p| p.iter().all(|&x| x < p_max))
    }
}

pub fn check_feasibility(gains: &GainSet, params: &GameParams, f: &EfficiencyModel) -> Result<Feasibility> {
    let targets = target_sinrs(gains, f)?;
    let load: Vec<f64> = (0..gains.users())
        .map(|k| targets[k] * (gains.gamma_cap[k].inverse() + gains.z_inv[k]))
        .collect();
    let feasible = load.iter().all(|&x| x < 1.0);
    let sigma2 = params.noise_var_w;
    let min_powers = feasible.then(|| {
        (0..gains.users())
            .map(|k| sigma2 * targets[k] / (gains.h_sp[k] * (1.0 - load[k])))
            .collect()
    });
    let exact_min_powers = powers_for_targets(gains, &targets, sigma2).ok();
    Ok(Feasibility {
        targets,
        load,
        feasible,
        min_powers,
        exact_min_powers,
    })
}

/// Nash-equilibrium state reached by best-response iteration.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumOutcome {
    pub powers: Vec<f64>,
    pub sinrs: Vec<f64>,
    pub utilities: Vec<f64>,
    pub target_sinr: Vec<f64>,
    /// Transmitting at `p_max` without reaching the target SINR.
    pub clipped: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumOutcome {
    pub fn any_clipped(&self) -> bool {
        self.clipped.iter().any(|&c| c)
    }

    pub fn utility_sum(&self) -> f64 {
        self.utilities.iter().sum()
    }
}

#[cfg(test)]
mod tests;
