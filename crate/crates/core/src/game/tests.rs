use super::*;
use crate::channel::{draw_realization_seeded, ChannelModel};
use crate::rake::{compute_gains, RakeConfig};
use crate::rng::trial_rng;
use rand::Rng;

fn m100() -> EfficiencyModel {
    EfficiencyModel::packet_exp(100)
}

fn gains_for(params: &GameParams, seed: u64, trial: u64) -> GainSet {
    let r = draw_realization_seeded(&ChannelModel::default(), params, seed, trial).unwrap();
    compute_gains(&r, &RakeConfig::ARake, params).unwrap()
}

fn single_user_flat(h: f64) -> GainSet {
    GainSet::from_parts(vec![h], vec![0.0], vec![vec![0.0]]).unwrap()
}

#[test]
fn utility_conventions() {
    let p = GameParams::with_defaults(1, 10, 30, 1);
    let f = m100();
    assert_eq!(utility(&p, &f, 0.0, 5.0).unwrap(), 0.0);
    assert!(utility(&p, &f, -1.0, 5.0).is_err());

    let g = solve_target_sinr(&f, SiRatio::Unbounded).unwrap();
    let u = utility(&p, &f, 1e-6, g).unwrap();
    let fg = (1.0 - (-g / 2.0).exp()).powi(100);
    assert!((u - 1e5 * fg / 1e-6).abs() <= 1e-12 * u);

    let mut half = p.clone();
    half.info_bits = 50;
    assert!((utility(&half, &f, 1e-6, g).unwrap() - 0.5 * u).abs() <= 1e-12 * u);
}

#[test]
fn sinr_special_cases() {
    let p = GameParams::with_defaults(3, 10, 30, 20);
    let g = gains_for(&p, 1, 0);
    assert_eq!(sinr(&g, &[0.0; 3], p.noise_var_w, 1), 0.0);

    let flat = single_user_flat(2.5);
    let snr = sinr(&flat, &[1e-9], 5e-16, 0);
    assert!((snr - 2.5 * 1e-9 / 5e-16).abs() <= 1e-12 * snr);
}

#[test]
fn sinr_matches_naive_evaluation() {
    let p = GameParams::with_defaults(6, 10, 30, 20);
    let g = gains_for(&p, 2, 0);
    let mut rng = trial_rng(3, 0);
    let powers: Vec<f64> = (0..6).map(|_| rng.random_range(1e-9..1e-7)).collect();
    for k in 0..6 {
        let mut mai = 0.0;
        for j in 0..6 {
            if j != k {
                mai += g.h_mai[k][j] * powers[j];
            }
        }
        let naive = g.h_sp[k] * powers[k] / (g.h_si[k] * powers[k] + mai + p.noise_var_w);
        assert!((sinr(&g, &powers, p.noise_var_w, k) - naive).abs() <= 1e-14 * naive);
    }
}

#[test]
fn best_response_without_interference() {
    let p = GameParams::with_defaults(1, 10, 30, 1);
    let f = m100();
    let g = single_user_flat(0.3);
    let target = solve_target_sinr(&f, SiRatio::Unbounded).unwrap();
    let br = best_response(&g, &[0.0], &p, &f, 0).unwrap();
    let expected = target * p.noise_var_w / 0.3;
    assert!((br - expected).abs() <= 1e-14 * expected);
}

#[test]
fn best_response_is_linear_in_interference() {
    let mut p = GameParams::with_defaults(4, 10, 30, 20);
    p.noise_var_w = 1e-300;
    p.p_max_w = f64::MAX;
    let f = m100();
    let g = gains_for(&p, 4, 0);
    let powers = [1e-8, 2e-8, 3e-8, 4e-8];
    let doubled: Vec<f64> = powers.iter().map(|x| 2.0 * x).collect();
    for k in 0..4 {
        let a = best_response(&g, &powers, &p, &f, k).unwrap();
        let b = best_response(&g, &doubled, &p, &f, k).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-13 * b);
    }
}

#[test]
fn best_response_beats_power_grid() {
    let f = m100();
    for inst in 0..50u64 {
        let p = GameParams::with_defaults(6, 10, 30, 20);
        let g = gains_for(&p, 100 + inst, 0);
        let mut rng = trial_rng(200, inst);
        let mut powers: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..2e-7)).collect();
        let k = (inst % 6) as usize;
        let br = best_response(&g, &powers, &p, &f, k).unwrap();
        powers[k] = br;
        let u_br = utility(&p, &f, br, sinr(&g, &powers, p.noise_var_w, k)).unwrap();
        for i in 1..=10_000 {
            powers[k] = p.p_max_w * i as f64 / 10_000.0;
            let u = utility(&p, &f, powers[k], sinr(&g, &powers, p.noise_var_w, k)).unwrap();
            assert!(u <= u_br * (1.0 + 1e-12), "instance {inst}: grid point {i} beats best response");
        }
    }
}

#[test]
fn utility_is_unimodal_in_own_power() {
    let p = GameParams::with_defaults(5, 10, 30, 20);
    let f = m100();
    let g = gains_for(&p, 9, 0);
    let mut powers = vec![5e-8; 5];
    let k = 2;
    let br = best_response(&g, &powers, &p, &f, k).unwrap();
    let grid: Vec<f64> = (1..=4000).map(|i| br * 3.0 * i as f64 / 4000.0).collect();
    let us: Vec<f64> = grid
        .iter()
        .map(|&x| {
            powers[k] = x;
            utility(&p, &f, x, sinr(&g, &powers, p.noise_var_w, k)).unwrap()
        })
        .collect();
    let signs: Vec<bool> = us.windows(2).map(|w| w[1] > w[0]).collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1);
    let peak = signs.iter().position(|&up| !up).unwrap();
    assert!((grid[peak] / br - 1.0).abs() < 3.0 / 4000.0 * 2.0);
}

#[test]
fn best_response_map_is_standard() {
    let f = m100();
    let mut checked = 0;
    for inst in 0..40u64 {
        let mut p = GameParams::with_defaults(5, 10, 30, 20);
        p.p_max_w = f64::MAX;
        let g = gains_for(&p, 300 + inst, 0);
        let mut rng = trial_rng(301, inst);
        for _ in 0..25 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1e-6)).collect();
            let b: Vec<f64> = a.iter().map(|x| x * rng.random_range(1.0..3.0)).collect();
            let mu = rng.random_range(1.0001..5.0);
            let scaled: Vec<f64> = a.iter().map(|x| mu * x).collect();
            for k in 0..5 {
                let ra = best_response(&g, &a, &p, &f, k).unwrap();
                let rb = best_response(&g, &b, &p, &f, k).unwrap();
                let rs = best_response(&g, &scaled, &p, &f, k).unwrap();
                assert!(ra > 0.0);
                assert!(rb >= ra);
                assert!(mu * ra > rs);
            }
            checked += 1;
        }
    }
    assert!(checked >= 1000);
}

#[test]
fn single_flat_user_is_always_feasible() {
    let p = GameParams::with_defaults(1, 10, 30, 1);
    let f = m100();
    let g = single_user_flat(0.8);
    let fz = check_feasibility(&g, &p, &f).unwrap();
    assert!(fz.feasible);
    let target = solve_target_sinr(&f, SiRatio::Unbounded).unwrap();
    let expected = target * p.noise_var_w / 0.8;
    assert!((fz.min_powers.as_ref().unwrap()[0] - expected).abs() <= 1e-14 * expected);
    assert!((fz.exact_min_powers.as_ref().unwrap()[0] - expected).abs() <= 1e-14 * expected);
}

#[test]
fn exact_min_powers_reach_every_target() {
    let p = GameParams::with_defaults(8, 10, 30, 20);
    let f = m100();
    let g = gains_for(&p, 12, 0);
    let fz = check_feasibility(&g, &p, &f).unwrap();
    assert!(fz.feasible);
    let powers = fz.exact_min_powers.unwrap();
    for k in 0..8 {
        let s = sinr(&g, &powers, p.noise_var_w, k);
        assert!((s - fz.targets[k]).abs() <= 1e-10 * fz.targets[k]);
    }
    // the closed form assumes equal received powers; it stays close here
    let closed = fz.min_powers.unwrap();
    for k in 0..8 {
        assert!((closed[k] / powers[k] - 1.0).abs() < 0.1);
    }
}

#[test]
fn unreachable_targets_are_reported() {
    let g = GainSet::from_parts(
        vec![1.0, 1.0],
        vec![0.0, 0.0],
        vec![vec![0.0, 0.2], vec![0.2, 0.0]],
    )
    .unwrap();
    assert!(matches!(powers_for_targets(&g, &[6.0, 6.0], 1e-3), Err(Error::Infeasible(_))));
    assert!(powers_for_targets(&g, &[4.0, 4.0], 1e-3).is_ok());
}

#[test]
fn feasibility_flips_at_nine_frames_in_dense_network() {
    let f = m100();
    let model = ChannelModel::default();
    let (mut at8, mut at9) = (0, 0);
    let trials = 20;
    for t in 0..trials {
        let p8 = GameParams::with_defaults(32, 8, 50, 100);
        let r = draw_realization_seeded(&model, &p8, 55, t).unwrap();
        let g8 = compute_gains(&r, &RakeConfig::ARake, &p8).unwrap();
        let g9 = g8.with_processing_gain_scaled(9.0 / 8.0);
        if check_feasibility(&g8, &p8, &f).unwrap().feasible {
            at8 += 1;
        }
        let p9 = GameParams::with_defaults(32, 9, 50, 100);
        if check_feasibility(&g9, &p9, &f).unwrap().feasible {
            at9 += 1;
        }
    }
    assert_eq!(at8, 0);
    assert!(at9 >= trials - 2, "{at9}/{trials} feasible at nine frames");
}
