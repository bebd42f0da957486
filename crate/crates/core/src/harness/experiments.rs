use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Experiment, FrameSplit, Scenario, TableCell};
use super::output::{finite_or_null, flag, int, num, Stats, Table};
use crate::brpc::{self, BrpcConfig};
use crate::channel::{channel_gain, draw_realization_seeded};
use crate::error::Result;
use crate::game::{check_feasibility, solve_target_sinr, to_db, EfficiencyModel, GameParams, SiRatio};
use crate::lsa::predict_equilibrium;
use crate::rake::{compute_gains, GainSet};
use crate::social::compare_ne_vs_social;

/// Rows, summary and optional sweep history of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: Table,
    pub summary: Value,
    pub trace: Option<Table>,
}

struct Ctx<'a> {
    s: &'a Scenario,
    f: EfficiencyModel,
    hash: String,
}

impl Ctx<'_> {
    /// `(seed, trial, scenario_hash)` cells present in every row.
    fn key(&self, trial: u64) -> [String; 3] {
        [int(self.s.seed), int(trial), self.hash.clone()]
    }

    fn trials<T: Send>(&self, body: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        (0..self.s.trials).into_par_iter().map(body).collect()
    }
}

const KEY_COLUMNS: [&str; 3] = ["seed", "trial", "scenario_hash"];

fn columns(extra_front: &[&'static str], rest: &[&'static str]) -> Vec<&'static str> {
    extra_front.iter().chain(KEY_COLUMNS.iter()).chain(rest.iter()).copied().collect()
}

fn with_shape(params: &GameParams, chips: usize, frames: usize, paths: usize, users: usize) -> GameParams {
    GameParams {
        chips,
        frames,
        paths,
        users,
        ..params.clone()
    }
}

/// Equilibrium powers, from the exact minimum-power solution when it lies
/// below `p_max` (the unique equilibrium then) and from iteration otherwise.
fn equilibrium_powers(
    gains: &GainSet,
    params: &GameParams,
    f: &EfficiencyModel,
    cfg: &BrpcConfig,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let fz = check_feasibility(gains, params, f)?;
    if fz.reachable_within(params.p_max_w) {
        let p = fz.exact_min_powers.expect("reachable");
        let k = p.len();
        return Ok((p, vec![false; k]));
    }
    let out = brpc::run(gains, params, f, cfg)?.0;
    Ok((out.powers, out.clipped))
}

fn lsa_json(params: &GameParams, f: &EfficiencyModel) -> Result<Value> {
    let pred = predict_equilibrium(params, f, &vec![1.0; params.users])?;
    Ok(json!({
        "rho": pred.rho,
        "nu": pred.nu,
        "target_sinr": pred.target_sinr,
        "target_sinr_db": to_db(pred.target_sinr),
        "load": pred.load,
        "feasible": pred.feasible,
        "min_nf": pred.min_nf,
        "min_nf_unrounded": pred.min_nf_unrounded,
        "z_inv_limit": pred.z_inv_limit[0],
        "gamma_inv_limit": pred.gamma_inv_limit[0],
        "q_w": pred.predicted_powers.as_ref().map(|p| p[0]),
        "utility_per_gain_bpj": pred.predicted_utilities.as_ref().map(|u| u[0]),
    }))
}

pub fn run_experiment(s: &Scenario) -> Result<ExperimentOutput> {
    s.validate()?;
    let ctx = Ctx {
        s,
        f: s.efficiency(),
        hash: s.hash(),
    };
    let (table, results, trace) = match &s.experiment {
        Experiment::TableQ { cells } => table_q(&ctx, cells.as_deref())?,
        Experiment::UtilityVsGain { variants } => utility_vs_gain(&ctx, variants.as_deref())?,
        Experiment::GammaStarCurve { db_min, db_max, points } => gamma_star_curve(&ctx, *db_min, *db_max, *points)?,
        Experiment::OutageVsNf { nf_min, nf_max } => outage_vs_nf(&ctx, *nf_min, *nf_max)?,
        Experiment::NeVsSocial { rho_values } => ne_vs_social(&ctx, rho_values)?,
        Experiment::Custom { trace } => custom(&ctx, *trace)?,
    };
    let g_inf = solve_target_sinr(&ctx.f, SiRatio::Unbounded)?;
    let summary = json!({
        "name": s.name,
        "experiment": s.experiment.kind(),
        "scenario_hash": ctx.hash,
        "schema_version": s.schema_version,
        "csv_schema": super::output::CSV_SCHEMA,
        "seed": s.seed,
        "trials": s.trials,
        "gamma_star_inf": g_inf,
        "gamma_star_inf_db": to_db(g_inf),
        "lsa": lsa_json(&s.params, &ctx.f)?,
        "results": results,
    });
    Ok(ExperimentOutput { table, summary, trace })
}

type Parts = (Table, Value, Option<Table>);

fn table_q(ctx: &Ctx, cells: Option<&[TableCell]>) -> Result<Parts> {
    let p = &ctx.s.params;
    let default_cell = [TableCell {
        chips: p.chips,
        frames: p.frames,
        paths: p.paths,
        users: p.users,
    }];
    let cells = cells.unwrap_or(&default_cell);
    let mut table = Table::new(&columns(
        &["cell", "chips", "frames", "paths", "users"],
        &["user", "h_sp", "power_w", "q_w", "clipped"],
    ));
    let mut summaries = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let params = with_shape(p, cell.chips, cell.frames, cell.paths, cell.users);
        params.validate()?;
        ctx.s.channel.validate(&params)?;
        ctx.s.rake.validate(params.paths)?;
        let per_trial = ctx.trials(|t| {
            let real = draw_realization_seeded(&ctx.s.channel, &params, ctx.s.seed, t)?;
            let gains = compute_gains(&real, &ctx.s.rake, &params)?;
            let (powers, clipped) = equilibrium_powers(&gains, &params, &ctx.f, &ctx.s.brpc)?;
            Ok((gains.h_sp, powers, clipped))
        })?;
        let mut qs = Vec::new();
        let mut n_clipped = 0;
        for (t, (h, powers, clipped)) in per_trial.into_iter().enumerate() {
            for k in 0..h.len() {
                let q = h[k] * powers[k];
                qs.push(q);
                n_clipped += usize::from(clipped[k]);
                let mut row = vec![int(ci as u64), int(cell.chips as u64), int(cell.frames as u64)];
                row.extend([int(cell.paths as u64), int(cell.users as u64)]);
                row.extend(ctx.key(t as u64));
                row.extend([int(k as u64), num(h[k]), num(powers[k]), num(q), flag(clipped[k])]);
                table.push(row);
            }
        }
        let st = Stats::of(&qs);
        summaries.push(json!({
            "cell": ci,
            "chips": cell.chips,
            "frames": cell.frames,
            "paths": cell.paths,
            "users": cell.users,
            "q_w": st.to_json(),
            "var_over_mean_sq": finite_or_null(st.variance / (st.mean * st.mean)),
            "clipped_users": n_clipped,
            "lsa": lsa_json(&params, &ctx.f)?,
        }));
    }
    Ok((table, json!({ "cells": summaries }), None))
}

fn utility_vs_gain(ctx: &Ctx, variants: Option<&[FrameSplit]>) -> Result<Parts> {
    let p = &ctx.s.params;
    let default_variant = [FrameSplit {
        chips: p.chips,
        frames: p.frames,
    }];
    let variants = variants.unwrap_or(&default_variant);
    let mut table = Table::new(&columns(
        &["variant", "chips", "frames"],
        &[
            "user",
            "channel_gain",
            "h_sp",
            "power_w",
            "power_pred_w",
            "sinr",
            "utility_bpj",
            "utility_pred_bpj",
            "clipped",
        ],
    ));
    let mut summaries = Vec::new();
    for (vi, v) in variants.iter().enumerate() {
        let params = with_shape(p, v.chips, v.frames, p.paths, p.users);
        params.validate()?;
        let per_trial = ctx.trials(|t| {
            let real = draw_realization_seeded(&ctx.s.channel, &params, ctx.s.seed, t)?;
            let gains = compute_gains(&real, &ctx.s.rake, &params)?;
            let out = brpc::run(&gains, &params, &ctx.f, &ctx.s.brpc)?.0;
            let h: Vec<f64> = (0..params.users).map(|k| channel_gain(&real, k)).collect();
            let pred = predict_equilibrium(&params, &ctx.f, &gains.h_sp)?;
            Ok((h, gains.h_sp, out, pred))
        })?;
        let mut deviations = Vec::new();
        let mut slope = f64::NAN;
        for (t, (h, h_sp, out, pred)) in per_trial.into_iter().enumerate() {
            let pp = pred.predicted_powers.unwrap_or_else(|| vec![f64::NAN; h.len()]);
            let up = pred.predicted_utilities.unwrap_or_else(|| vec![f64::NAN; h.len()]);
            for k in 0..h.len() {
                if !out.clipped[k] {
                    deviations.push((out.utilities[k] - up[k]).abs() / up[k]);
                }
                slope = up[k] / h_sp[k];
                let mut row = vec![int(vi as u64), int(v.chips as u64), int(v.frames as u64)];
                row.extend(ctx.key(t as u64));
                row.extend([
                    int(k as u64),
                    num(h[k]),
                    num(h_sp[k]),
                    num(out.powers[k]),
                    num(pp[k]),
                    num(out.sinrs[k]),
                    num(out.utilities[k]),
                    num(up[k]),
                    flag(out.clipped[k]),
                ]);
                table.push(row);
            }
        }
        let dev = Stats::of(&deviations);
        summaries.push(json!({
            "variant": vi,
            "chips": v.chips,
            "frames": v.frames,
            "relative_deviation": dev.to_json(),
            "predicted_utility_per_gain_bpj": finite_or_null(slope),
            "lsa": lsa_json(&params, &ctx.f)?,
        }));
    }
    Ok((table, json!({ "variants": summaries }), None))
}

fn gamma_star_curve(ctx: &Ctx, db_min: f64, db_max: f64, points: usize) -> Result<Parts> {
    let mut table = Table::new(&columns(&[], &["gamma_cap_db", "gamma_cap", "gamma_star", "gamma_star_db"]));
    let mut last = f64::NAN;
    for i in 0..points {
        let db = db_min + (db_max - db_min) * i as f64 / (points - 1) as f64;
        let cap = crate::game::from_db(db);
        let g = solve_target_sinr(&ctx.f, SiRatio::Finite(cap))?;
        last = g;
        let mut row = ctx.key(0).to_vec();
        row.extend([num(db), num(cap), num(g), num(to_db(g))]);
        table.push(row);
    }
    let g_inf = solve_target_sinr(&ctx.f, SiRatio::Unbounded)?;
    Ok((
        table,
        json!({
            "points": points,
            "rightmost_gamma_star_db": to_db(last),
            "plateau_gap_db": to_db(g_inf) - to_db(last),
        }),
        None,
    ))
}

fn outage_vs_nf(ctx: &Ctx, nf_min: usize, nf_max: usize) -> Result<Parts> {
    let p = &ctx.s.params;
    let base = with_shape(p, p.chips, nf_min, p.paths, p.users);
    base.validate()?;
    let span: Vec<usize> = (nf_min..=nf_max).collect();
    let per_trial = ctx.trials(|t| {
        let real = draw_realization_seeded(&ctx.s.channel, &base, ctx.s.seed, t)?;
        let g0 = compute_gains(&real, &ctx.s.rake, &base)?;
        span.iter()
            .map(|&nf| {
                let params = with_shape(p, p.chips, nf, p.paths, p.users);
                let gains = g0.with_processing_gain_scaled(nf as f64 / nf_min as f64);
                let fz = check_feasibility(&gains, &params, &ctx.f)?;
                let out = brpc::run(&gains, &params, &ctx.f, &ctx.s.brpc)?.0;
                let max_load = fz.load.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let max_power = out.powers.iter().copied().fold(0.0, f64::max);
                Ok((fz.feasible, out.any_clipped(), max_power, max_load, out.iterations, out.converged))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut table = Table::new(&columns(
        &["frames"],
        &["feasible", "any_clipped", "max_power_w", "max_load", "sweeps", "converged"],
    ));
    let mut summaries = Vec::new();
    for (i, &nf) in span.iter().enumerate() {
        let mut clipped = 0usize;
        let mut feasible = 0usize;
        let mut loads = Vec::new();
        for (t, trial) in per_trial.iter().enumerate() {
            let (fe, cl, mp, ml, it, cv) = trial[i];
            clipped += usize::from(cl);
            feasible += usize::from(fe);
            loads.push(ml);
            let mut row = vec![int(nf as u64)];
            row.extend(ctx.key(t as u64));
            row.extend([flag(fe), flag(cl), num(mp), num(ml), int(it as u64), flag(cv)]);
            table.push(row);
        }
        let n = per_trial.len() as f64;
        let params = with_shape(p, p.chips, nf, p.paths, p.users);
        summaries.push(json!({
            "frames": nf,
            "outage_probability": clipped as f64 / n,
            "feasible_fraction": feasible as f64 / n,
            "max_load": Stats::of(&loads).to_json(),
            "lsa_feasible": predict_equilibrium(&params, &ctx.f, &vec![1.0; p.users])?.feasible,
        }));
    }
    let pred = predict_equilibrium(p, &ctx.f, &vec![1.0; p.users])?;
    Ok((
        table,
        json!({
            "by_frames": summaries,
            "lsa_min_nf": pred.min_nf,
            "lsa_min_nf_unrounded": pred.min_nf_unrounded,
        }),
        None,
    ))
}

fn ne_vs_social(ctx: &Ctx, rho_values: &[f64]) -> Result<Parts> {
    let p = &ctx.s.params;
    let mut table = Table::new(&columns(
        &["rho", "chips"],
        &[
            "feasible",
            "ne_mean_sinr",
            "ne_mean_sinr_db",
            "gamma_opt",
            "gamma_opt_db",
            "ne_utility_sum_bpj",
            "social_utility_sum_bpj",
            "ne_normalized_bpj",
            "social_normalized_bpj",
            "gap",
        ],
    ));
    let mut summaries = Vec::new();
    for &rho in rho_values {
        let chips = (rho * p.paths as f64).round() as usize;
        let params = with_shape(p, chips, p.frames, p.paths, p.users);
        let cmp = compare_ne_vs_social(
            &params,
            &ctx.f,
            &ctx.s.channel,
            &ctx.s.rake,
            &ctx.s.brpc,
            ctx.s.trials,
            ctx.s.seed,
        )?;
        for d in &cmp.draws {
            let mut row = vec![num(rho), int(chips as u64)];
            row.extend(ctx.key(d.trial));
            row.extend([
                flag(d.feasible),
                num(d.ne_mean_sinr),
                num(to_db(d.ne_mean_sinr)),
                num(cmp.gamma_opt),
                num(to_db(cmp.gamma_opt)),
                num(d.ne_utility_sum),
                num(d.social_utility_sum),
                num(d.ne_normalized_utility),
                num(d.social_normalized_utility),
                num(d.gap),
            ]);
            table.push(row);
        }
        let ne_sinr: Vec<f64> = cmp.draws.iter().filter(|d| d.feasible).map(|d| d.ne_mean_sinr).collect();
        let ne_norm: Vec<f64> = cmp.draws.iter().filter(|d| d.feasible).map(|d| d.ne_normalized_utility).collect();
        let so_norm: Vec<f64> =
            cmp.draws.iter().filter(|d| d.feasible).map(|d| d.social_normalized_utility).collect();
        summaries.push(json!({
            "rho": rho,
            "chips": chips,
            "processing_gain": params.processing_gain(),
            "feasible_draws": cmp.feasible_count(),
            "gamma_opt": cmp.gamma_opt,
            "gamma_opt_db": to_db(cmp.gamma_opt),
            "ne_mean_sinr": Stats::of(&ne_sinr).to_json(),
            "ne_normalized_bpj": Stats::of(&ne_norm).to_json(),
            "social_normalized_bpj": Stats::of(&so_norm).to_json(),
            "mean_gap": finite_or_null(cmp.mean_gap()),
            "max_gap": finite_or_null(cmp.max_gap()),
            "dominance_fraction": finite_or_null(cmp.dominance_fraction()),
            "ordering_fraction": finite_or_null(cmp.ordering_fraction(1e-9)),
        }));
    }
    Ok((table, json!({ "by_rho": summaries }), None))
}

fn custom(ctx: &Ctx, want_trace: bool) -> Result<Parts> {
    let params = &ctx.s.params;
    let per_trial = ctx.trials(|t| {
        let real = draw_realization_seeded(&ctx.s.channel, params, ctx.s.seed, t)?;
        let gains = compute_gains(&real, &ctx.s.rake, params)?;
        let cfg = BrpcConfig {
            record_trace: want_trace && t == 0,
            ..ctx.s.brpc.clone()
        };
        let (out, trace) = brpc::run(&gains, params, &ctx.f, &cfg)?;
        Ok((gains.h_sp, out, trace))
    })?;
    let mut table = Table::new(&columns(
        &[],
        &[
            "user",
            "h_sp",
            "power_w",
            "sinr",
            "sinr_db",
            "target_sinr",
            "utility_bpj",
            "clipped",
            "sweeps",
            "converged",
        ],
    ));
    let mut trace_table = None;
    let (mut sweeps, mut converged, mut clipped) = (Vec::new(), 0usize, 0usize);
    for (t, (h, out, trace)) in per_trial.into_iter().enumerate() {
        sweeps.push(out.iterations as f64);
        converged += usize::from(out.converged);
        for k in 0..h.len() {
            clipped += usize::from(out.clipped[k]);
            let mut row = ctx.key(t as u64).to_vec();
            row.extend([
                int(k as u64),
                num(h[k]),
                num(out.powers[k]),
                num(out.sinrs[k]),
                num(to_db(out.sinrs[k])),
                num(out.target_sinr[k]),
                num(out.utilities[k]),
                flag(out.clipped[k]),
                int(out.iterations as u64),
                flag(out.converged),
            ]);
            table.push(row);
        }
        if t == 0 && want_trace {
            let mut tt = Table::new(&["sweep", "user", "power_w", "sinr"]);
            for (s, (pw, sn)) in trace.powers.iter().zip(&trace.sinrs).enumerate() {
                for k in 0..pw.len() {
                    tt.push(vec![int(s as u64), int(k as u64), num(pw[k]), num(sn[k])]);
                }
            }
            trace_table = Some(tt);
        }
    }
    let n = ctx.s.trials as f64;
    Ok((
        table,
        json!({
            "sweeps": Stats::of(&sweeps).to_json(),
            "converged_fraction": converged as f64 / n,
            "clipped_users": clipped,
        }),
        trace_table,
    ))
}
