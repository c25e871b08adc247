//! Taylor coefficients (recursion vs partial fractions, closed forms) and
//! the convergence `S_k(T)x → x` on the range component.

use std::time::Instant;

use polycalc_core::ergodic::full_decomposition;
use polycalc_core::instances::{derive_seed, gen_ritt_matrix, random_unit_vector, stream_rng};
use polycalc_core::numerics::{vec_norm, C64, ONE, ZERO};
use polycalc_core::polygonal::PointSetE;
use polycalc_core::taylor::{a_coeffs_recursive, a_from_beta, beta_weights, lemma34_adaptive, TaylorCoeffs};
use rand::Rng;

use super::{cycle_dim, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.coeffs;
    let mut section = Section::new("coeffs");
    let seed = ctx.section_seed(1);

    let start = Instant::now();
    let sets: Vec<PointSetE> = (0..cfg.random_sets)
        .map(|i| random_e(&mut stream_rng(seed, i as u64), cfg.max_points, cfg.min_separation))
        .collect();
    let agreement: Vec<Result<f64, String>> = trials(sets.len(), |i| recursion_vs_beta(&sets[i], cfg.m_max));
    let exact_failures = closed_form_failures(cfg.m_max);
    let elapsed = start.elapsed().as_secs_f64();
    section.check(Check::max_of(
        "recursion_vs_partial_fractions",
        Some(1),
        &agreement,
        cfg.tol,
    ));
    section.check(Check::all("closed_forms_exact", Some(1), exact_failures));
    section.timed_checks.push(Check::at_most("coefficients_runtime_s", Some(1), elapsed, cfg.time_limit_s));

    let mut table = Table::new("coeffs", &["m", "re_a", "im_a"]);
    for (m, a) in a_coeffs_recursive(&ctx.e, cfg.m_max).iter().enumerate() {
        table.push(vec![cell(m), cell(a.re), cell(a.im)]);
    }
    section.table(table);

    // γ boundedness for the configured E and every random set.
    let l = &cfg.lemma34;
    let mut gamma_sets = vec![ctx.e.clone()];
    gamma_sets.extend(sets.iter().cloned());
    let gamma: Vec<Result<f64, String>> = trials(gamma_sets.len(), |i| gamma_ratio(&gamma_sets[i], l.gamma_k_max));
    section.check(Check::max_of("gamma_bound_ratio", Some(2), &gamma, 1.0));

    let rows: Vec<Result<Lemma34Row, String>> = trials(l.matrices, |i| lemma34_trial(ctx, derive_seed(seed, 1000 + i as u64), i));
    let residuals = project(&rows, |r| r.final_residual);
    section.check(Check::max_of("lemma34_final_residual", Some(2), &residuals, l.tol));
    let trend_failures = rows.iter().filter(|r| !matches!(r, Ok(row) if row.trends_down)).count();
    section.check(Check::all("lemma34_trends_down", Some(2), trend_failures));
    let mut trace = Table::new("lemma34", &["instance", "dim", "peripheral_count", "k", "residual"]);
    let mut ks = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if let Ok(row) = row {
            ks.push(row.residuals.len() - 1);
            for (k, r) in row.residuals.iter().enumerate() {
                trace.push(vec![cell(i), cell(row.dim), cell(row.pc), cell(k), cell(r)]);
            }
        }
    }
    section.metric("lemma34_adaptive_k", ks);
    section.table(trace);
    section
}

/// Random `E` with `1..=max_points` points, pairwise at least `min_sep` apart.
fn random_e<R: Rng>(rng: &mut R, max_points: usize, min_sep: f64) -> PointSetE {
    let n = rng.random_range(1..=max_points);
    loop {
        let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        if let Ok(e) = PointSetE::from_angles(&angles) {
            if e.min_pairwise_distance() >= min_sep {
                return e;
            }
        }
    }
}

/// `max_m |a_m − Σβ_iξ̄_i^m| / max(1, Σ|β_i|)`.
fn recursion_vs_beta(e: &PointSetE, m_max: usize) -> Result<f64, String> {
    let a = a_coeffs_recursive(e, m_max);
    let beta = beta_weights(e).map_err(|err| err.to_string())?;
    let scale = beta.iter().map(|b| b.norm()).sum::<f64>().max(1.0);
    Ok(a.iter()
        .enumerate()
        .map(|(m, am)| (am - a_from_beta(&beta, e, m)).norm() / scale)
        .fold(0.0, f64::max))
}

/// Mismatches against `E = {1}` (all ones) and `E = {1, −1}` (1, 0, 1, 0, …).
fn closed_form_failures(m_max: usize) -> usize {
    let one = PointSetE::new(vec![ONE]).expect("valid");
    let pm = PointSetE::new(vec![ONE, -ONE]).expect("valid");
    let a1 = a_coeffs_recursive(&one, m_max);
    let a2 = a_coeffs_recursive(&pm, m_max);
    let bad1 = a1.iter().filter(|a| **a != ONE).count();
    let bad2 = a2
        .iter()
        .enumerate()
        .filter(|(m, a)| **a != if m % 2 == 0 { ONE } else { ZERO })
        .count();
    bad1 + bad2
}

/// `sup_{k≤k_max, r} |γ_{r,k}|` over `(N + 1)·max|c_i|·sup_{m≤k_max}|a_m|`.
fn gamma_ratio(e: &PointSetE, k_max: usize) -> Result<f64, String> {
    let coeffs = TaylorCoeffs::new(e, k_max).map_err(|err| err.to_string())?;
    let n = coeffs.n();
    let c_max = coeffs.c.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let bound = (n as f64 + 1.0) * c_max * coeffs.sup_a();
    let sup = (0..=k_max)
        .flat_map(|k| coeffs.gammas(k))
        .map(|g: C64| g.norm())
        .fold(0.0, f64::max);
    Ok(sup / bound)
}

struct Lemma34Row {
    dim: usize,
    pc: usize,
    residuals: Vec<f64>,
    final_residual: f64,
    trends_down: bool,
}

fn lemma34_trial(ctx: &Context, seed: u64, i: usize) -> Result<Lemma34Row, String> {
    let l = &ctx.cfg.coeffs.lemma34;
    let e = &ctx.e;
    let dim = cycle_dim(i, 2, l.max_dim);
    // At least one interior eigenvalue so the range component is nonzero.
    let pc = peripheral_count(i, e.len(), dim - 1);
    let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, l.cond_cap, seed).map_err(|err| err.to_string())?;
    let cl = &ctx.cfg.classify;
    let dec = full_decomposition(&t, e, cl.cesaro_length, cl.projection_tol).map_err(|err| err.to_string())?;
    let x = &dec.range_projection * random_unit_vector(&mut stream_rng(seed, 1), dim);
    let norm = vec_norm(&x);
    let mut coeffs = TaylorCoeffs::new(e, 64).map_err(|err| err.to_string())?;
    let trace = lemma34_adaptive(&t, &mut coeffs, &x, l.tol, l.k_cap).map_err(|err| err.to_string())?;
    let last = *trace.residuals.last().expect("non-empty trace");
    Ok(Lemma34Row {
        dim,
        pc,
        final_residual: last / norm.max(f64::MIN_POSITIVE),
        trends_down: trace.trends_down(l.trend_blocks, l.trend_slack),
        residuals: trace.residuals,
    })
}
