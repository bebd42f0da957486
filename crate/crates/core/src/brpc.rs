//! Best-response power control: every user repeatedly moves to its best
//! response against the others' current powers.
//!
//! Users update in index order within a sweep (Gauss-Seidel), so a user
//! always sees the powers already chosen by earlier users in the same sweep.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{self, EfficiencyModel, EquilibriumOutcome, GameParams};
use crate::rake::GainSet;
use crate::rng::trial_rng;

/// Starting powers as a fraction of `σ² / max h_sp`.
const START_FLOOR_FACTOR: f64 = 1e-3;
/// Relative SINR shortfall under which a user at `p_max` counts as clipped.
const CLIP_SHORTFALL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    /// A tiny common power, well below any equilibrium.
    ZeroPlusEps,
    /// Independent uniform draws on `(0, p_max]`.
    UniformRandom { seed: u64 },
    Given { powers: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Uses only the user's own power and measured SINR.
    Distributed,
    /// Evaluates the interference sum from the full gain matrix.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrpcConfig {
    pub max_sweeps: usize,
    /// Stop once `max_k |Δp_k| / p_k` over a sweep falls below this.
    pub tol_power_rel: f64,
    pub init: Init,
    pub update: UpdateRule,
    /// Keep a per-sweep snapshot of powers and SINRs.
    pub record_trace: bool,
}

impl Default for BrpcConfig {
    fn default() -> Self {
        BrpcConfig {
            max_sweeps: 10_000,
            tol_power_rel: 1e-9,
            init: Init::ZeroPlusEps,
            update: UpdateRule::Distributed,
            record_trace: false,
        }
    }
}

impl BrpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::config("brpc.max_sweeps", "must be at least 1"));
        }
        if !(self.tol_power_rel > 0.0 && self.tol_power_rel.is_finite()) {
            return Err(Error::config("brpc.tol_power_rel", "must be positive and finite"));
        }
        if let Init::Given { powers } = &self.init {
            if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::config("brpc.init.powers", "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Per-sweep history; `powers[0]` and `sinrs[0]` hold the starting point.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationTrace {
    pub sweeps: usize,
    pub powers: Vec<Vec<f64>>,
    pub sinrs: Vec<Vec<f64>>,
}

/// Interference plus noise seen by user `k`, recovered from its own power and
/// SINR: `h_sp·p·(1 - γ/Γ)/γ`.
pub fn reconstruct_interference(gains: &GainSet, power: f64, sinr: f64, k: usize) -> Result<f64> {
    if !(power > 0.0 && sinr > 0.0) {
        return Err(Error::Domain(format!(
            "interference is unobservable at power {power}, SINR {sinr}"
        )));
    }
    Ok(gains.h_sp[k] * power * gains.gamma_cap[k].headroom(sinr) / sinr)
}

fn start_powers(gains: &GainSet, params: &GameParams, init: &Init) -> Result<Vec<f64>> {
    let k_users = gains.users();
    let max_h = gains.h_sp.iter().copied().fold(0.0, f64::max);
    let floor = (START_FLOOR_FACTOR * params.noise_var_w / max_h).min(params.p_max_w);
    let mut p = match init {
        Init::ZeroPlusEps => vec![floor; k_users],
        Init::UniformRandom { seed } => {
            let mut rng = trial_rng(*seed, 0);
            (0..k_users)
                .map(|_| params.p_max_w * (1.0 - rng.random::<f64>()))
                .collect()
        }
        Init::Given { powers } => {
            if powers.len() != k_users {
                return Err(Error::config(
                    "brpc.init.powers",
                    format!("expected {k_users} entries, got {}", powers.len()),
                ));
            }
            powers.iter().map(|&x| x.min(params.p_max_w)).collect()
        }
    };
    // the distributed rule needs a measurable SINR
    for x in p.iter_mut() {
        if *x <= 0.0 {
            *x = floor;
        }
    }
    Ok(p)
}

/// Runs best-response sweeps until the powers settle or `max_sweeps` is hit.
pub fn run(
    gains: &GainSet,
    params: &GameParams,
    f: &EfficiencyModel,
    cfg: &BrpcConfig,
) -> Result<(EquilibriumOutcome, IterationTrace)> {
    cfg.validate()?;
    let k_users = gains.users();
    let sigma2 = params.noise_var_w;
    let p_max = params.p_max_w;
    let targets = game::target_sinrs(gains, f)?;
    let mut p = start_powers(gains, params, &cfg.init)?;

    let mut trace = IterationTrace::default();
    if cfg.record_trace {
        trace.powers.push(p.clone());
        trace.sinrs.push(game::sinrs(gains, &p, sigma2));
    }

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut max_rel = 0.0f64;
        for k in 0..k_users {
            let old = p[k];
            let cap = gains.gamma_cap[k];
            let target = targets[k];
            let new = match cfg.update {
                UpdateRule::Distributed => {
                    let g = game::sinr(gains, &p, sigma2, k);
                    old * (target / g) * cap.headroom(g) / cap.headroom(target)
                }
                UpdateRule::Direct => game::unconstrained_response(gains, &p, sigma2, k, target),
            };
            let new = new.clamp(0.0, p_max);
            max_rel = max_rel.max((new - old).abs() / new.max(1e-30));
            p[k] = new;
        }
        if cfg.record_trace {
            trace.powers.push(p.clone());
            trace.sinrs.push(game::sinrs(gains, &p, sigma2));
        }
        if max_rel < cfg.tol_power_rel {
            converged = true;
            break;
        }
    }
    trace.sweeps = sweeps;
    if !converged {
        log::warn!("best-response iteration stopped after {sweeps} sweeps without settling");
    }

    let sinrs = game::sinrs(gains, &p, sigma2);
    let utilities = (0..k_users)
        .map(|k| game::utility(params, f, p[k], sinrs[k]))
        .collect::<Result<Vec<_>>>()?;
    let clipped = (0..k_users)
        .map(|k| p[k] >= p_max && sinrs[k] < targets[k] * (1.0 - CLIP_SHORTFALL))
        .collect();
    Ok((
        EquilibriumOutcome {
            powers: p,
            sinrs,
            utilities,
            target_sinr: targets,
            clipped,
            iterations: sweeps,
            converged,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization_seeded, ChannelModel};
    use crate::game::{check_feasibility, solve_target_sinr, SiRatio};
    use crate::rake::{compute_gains, RakeConfig};

    fn m100() -> EfficiencyModel {
        EfficiencyModel::packet_exp(100)
    }

    fn instance(users: usize, frames: usize, seed: u64) -> (GameParams, GainSet) {
        let p = GameParams::with_defaults(users, frames, 30, 20);
        let r = draw_realization_seeded(&ChannelModel::default(), &p, seed, 0).unwrap();
        let g = compute_gains(&r, &RakeConfig::ARake, &p).unwrap();
        (p, g)
    }

    fn traced(update: UpdateRule, init: Init) -> BrpcConfig {
        BrpcConfig {
            update,
            init,
            record_trace: true,
            ..BrpcConfig::default()
        }
    }

    #[test]
    fn update_rules_follow_the_same_path() {
        let (p, g) = instance(8, 10, 1);
        let (a, ta) = run(&g, &p, &m100(), &traced(UpdateRule::Distributed, Init::ZeroPlusEps)).unwrap();
        let (b, tb) = run(&g, &p, &m100(), &traced(UpdateRule::Direct, Init::ZeroPlusEps)).unwrap();
        assert!(a.converged && b.converged);
        let n = ta.powers.len().min(tb.powers.len());
        assert!(n > 3);
        for s in 0..n {
            for k in 0..8 {
                let (x, y) = (ta.powers[s][k], tb.powers[s][k]);
                assert!((x - y).abs() <= 1e-12 * x.max(y), "sweep {s} user {k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn random_starts_reach_the_same_equilibrium() {
        let (p, g) = instance(6, 10, 2);
        let reference = run(&g, &p, &m100(), &BrpcConfig::default()).unwrap().0;
        for seed in 0..5 {
            let cfg = BrpcConfig {
                init: Init::UniformRandom { seed },
                ..BrpcConfig::default()
            };
            let out = run(&g, &p, &m100(), &cfg).unwrap().0;
            for k in 0..6 {
                let rel = (out.powers[k] / reference.powers[k] - 1.0).abs();
                assert!(rel < 1e-7, "seed {seed} user {k}: {rel:e}");
            }
        }
    }

    #[test]
    fn single_flat_user_settles_immediately() {
        let p = GameParams::with_defaults(1, 10, 30, 1);
        let g = GainSet::from_parts(vec![0.7], vec![0.0], vec![vec![0.0]]).unwrap();
        let out = run(&g, &p, &m100(), &BrpcConfig::default()).unwrap().0;
        assert!(out.converged);
        assert!(out.iterations <= 3);
        let target = solve_target_sinr(&m100(), SiRatio::Unbounded).unwrap();
        assert!((out.powers[0] - target * p.noise_var_w / 0.7).abs() < 1e-12 * out.powers[0]);
    }

    #[test]
    fn powers_rise_monotonically_from_below() {
        let (p, g) = instance(10, 10, 3);
        let (out, tr) = run(&g, &p, &m100(), &traced(UpdateRule::Distributed, Init::ZeroPlusEps)).unwrap();
        assert!(out.converged);
        for w in tr.powers.windows(2) {
            for k in 0..10 {
                assert!(w[1][k] >= w[0][k] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn converged_users_sit_at_their_target() {
        for seed in 0..10 {
            let (p, g) = instance(8, 10, 10 + seed);
            let cfg = BrpcConfig::default();
            let out = run(&g, &p, &m100(), &cfg).unwrap().0;
            assert!(out.converged);
            for k in 0..8 {
                if !out.clipped[k] {
                    let rel = (out.sinrs[k] / out.target_sinr[k] - 1.0).abs();
                    assert!(rel < 10.0 * cfg.tol_power_rel, "seed {seed} user {k}: {rel:e}");
                }
            }
        }
    }

    #[test]
    fn equilibrium_equals_minimum_target_powers() {
        for seed in 0..10 {
            let (p, g) = instance(8, 10, 40 + seed);
            let fz = check_feasibility(&g, &p, &m100()).unwrap();
            let out = run(&g, &p, &m100(), &BrpcConfig::default()).unwrap().0;
            let exact = fz.exact_min_powers.expect("feasible instance");
            for k in 0..8 {
                assert!((out.powers[k] / exact[k] - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn overloaded_system_clips_someone() {
        // 24 users at processing gain 8 cannot all reach their targets
        let p = GameParams::with_defaults(24, 1, 8, 4);
        let r = draw_realization_seeded(&ChannelModel::default(), &p, 5, 0).unwrap();
        let g = compute_gains(&r, &RakeConfig::ARake, &p).unwrap();
        assert!(!check_feasibility(&g, &p, &m100()).unwrap().feasible);
        let out = run(&g, &p, &m100(), &BrpcConfig::default()).unwrap().0;
        assert!(out.converged);
        assert!(out.any_clipped());
    }

    #[test]
    fn interference_reconstruction_matches_direct_sum() {
        let (p, g) = instance(5, 10, 7);
        let powers = vec![1e-8, 3e-8, 2e-9, 7e-8, 5e-8];
        for k in 0..5 {
            let s = game::sinr(&g, &powers, p.noise_var_w, k);
            let rec = reconstruct_interference(&g, powers[k], s, k).unwrap();
            let direct = game::interference_plus_noise(&g, &powers, p.noise_var_w, k);
            assert!((rec - direct).abs() < 1e-12 * direct);
        }
        assert!(reconstruct_interference(&g, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn given_start_must_match_user_count() {
        let (p, g) = instance(3, 10, 8);
        let cfg = BrpcConfig {
            init: Init::Given { powers: vec![1e-9; 2] },
            ..BrpcConfig::default()
        };
        assert!(run(&g, &p, &m100(), &cfg).is_err());
    }
}
