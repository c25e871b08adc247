//! Contour-integral functional calculus against direct polynomial
//! evaluation, winding-number calibration and the bounded-ratio
//! certificate over the enclosing polygon.

use polycalc_core::funcalc::{
    contour_eval_multi, polygonal_calculus, theorem51_certificate, ContourQuadrature, FuncalcOptions,
    Theorem51Report,
};
use polycalc_core::instances::{derive_seed, gen_commuting_tuple, gen_ritt_matrix, stream_rng, TupleSpec};
use polycalc_core::multivar::{eval_multipoly, MultiPoly};
use polycalc_core::numerics::{c, opnorm, spectrum, C64};
use polycalc_core::polygonal::build_er;
use rand::Rng;

use super::{cycle_dim, err_string, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

/// Relative gap `‖A − B‖/max(1, ‖B‖)`.
fn rel_gap(a: &polycalc_core::CMatrix, b: &polycalc_core::CMatrix) -> f64 {
    opnorm(&(a - b)) / opnorm(b).max(1.0)
}

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.funcalc;
    let e = &ctx.e;
    let r = ctx.cfg.r;
    let mut section = Section::new("funcalc");
    let seed = ctx.section_seed(7);
    let opts = FuncalcOptions {
        nodes_per_panel: cfg.nodes_per_panel,
        ..FuncalcOptions::default()
    };

    let one_d: Vec<Result<(usize, usize, usize, f64), String>> = trials(cfg.instances_1d, |i| {
        let dim = cycle_dim(i, 1, cfg.max_dim_1d);
        let pc = peripheral_count(i, e.len(), dim);
        let s = derive_seed(seed, i as u64);
        let t = gen_ritt_matrix(e, r, dim, pc, cfg.cond_cap, s).map_err(err_string)?;
        let degree = cfg.degree_1d - i % cfg.degree_1d;
        let phi = MultiPoly::random(&mut stream_rng(s, 1), 1, degree);
        let contour = polygonal_calculus(&phi, &t, e, r, &opts).map_err(err_string)?;
        let direct = eval_multipoly(&phi, std::slice::from_ref(&t)).map_err(err_string)?;
        Ok((dim, pc, degree, rel_gap(&contour, &direct)))
    });
    section.check(Check::max_of("contour_vs_direct_1d", Some(9), &project(&one_d, |r| r.3), cfg.tol_1d));
    let mut table = Table::new("funcalc_1d", &["instance", "dim", "peripheral_count", "degree", "relative_error"]);
    for (i, row) in one_d.iter().enumerate() {
        if let Ok((dim, pc, deg, err)) = row {
            table.push(vec![cell(i), cell(dim), cell(pc), cell(deg), cell(err)]);
        }
    }
    section.table(table);

    let region = build_er(e, r);
    let two_d: Vec<Result<f64, String>> = trials(cfg.instances_2d, |i| {
        let region = region.as_ref().map_err(err_string)?;
        let s = derive_seed(seed, 1000 + i as u64);
        let spec = TupleSpec {
            e: Some(e.clone()),
            r,
            cond_cap: cfg.cond_cap,
            ..TupleSpec::default()
        };
        let ts = gen_commuting_tuple(2, cfg.dim_2d, &spec, s).map_err(err_string)?;
        let avoid: Vec<C64> = ts.iter().flat_map(spectrum).collect();
        let quad = ContourQuadrature::adapted(region, cfg.nodes_per_panel, &avoid);
        let phi = MultiPoly::random(&mut stream_rng(s, 1), 2, cfg.degree_2d);
        let contour = contour_eval_multi(&phi, &ts, &quad).map_err(err_string)?;
        let direct = eval_multipoly(&phi, &ts).map_err(err_string)?;
        Ok(rel_gap(&contour, &direct))
    });
    section.check(Check::max_of("contour_vs_direct_2d", Some(9), &two_d, cfg.tol_2d));
    let mut table = Table::new("funcalc_2d", &["instance", "degree", "relative_error"]);
    for (i, row) in two_d.iter().enumerate() {
        if let Ok(err) = row {
            table.push(vec![cell(i), cell(cfg.degree_2d), cell(err)]);
        }
    }
    section.table(table);

    let winding = winding_calibration(ctx, seed);
    section.check(Check::max_of("winding_calibration", Some(9), &[winding], cfg.winding_tol));

    let th = &cfg.theorem51;
    let reports: Vec<Result<Theorem51Report, String>> = trials(th.tuples, |i| {
        let s = derive_seed(seed, 2000 + i as u64);
        let spec = TupleSpec {
            e: Some(e.clone()),
            r,
            peripheral_count: th.peripheral_count,
            cond_cap: th.cond_cap,
            ..TupleSpec::default()
        };
        let ts = gen_commuting_tuple(th.d, th.dim, &spec, s).map_err(err_string)?;
        theorem51_certificate(&ts, e, r, s, &th.grid, &th.options).map_err(err_string)
    });
    let failing = reports.iter().filter(|rep| !matches!(rep, Ok(r) if r.passes)).count();
    let mut check = Check::all("theorem51_certificates", Some(9), failing);
    let errors: Vec<String> = reports
        .iter()
        .enumerate()
        .filter_map(|(i, rep)| rep.as_ref().err().map(|e| format!("tuple {i}: {e}")))
        .collect();
    if !errors.is_empty() {
        check = check.with_detail(errors.join("; "));
    }
    section.check(check);
    let mut summary = Table::new("theorem51", &["tuple", "slope", "p_value", "max_ratio", "similarity_margin", "passes"]);
    let mut degrees = Table::new("theorem51_degrees", &["tuple", "degree", "samples", "max_ratio", "mean_ratio"]);
    for (i, rep) in reports.iter().enumerate() {
        let Ok(rep) = rep else { continue };
        summary.push(vec![
            cell(i),
            cell(rep.slope),
            cell(rep.p_value),
            cell(rep.max_ratio),
            cell(rep.similarity_margin),
            cell(rep.passes),
        ]);
        for row in &rep.rows {
            degrees.push(vec![cell(i), cell(row.degree), cell(row.samples), cell(row.max_ratio), cell(row.mean_ratio)]);
        }
    }
    section.table(summary);
    section.table(degrees);
    section
}

/// Largest `|w(z) − 1|` over interior points and `|w(z)|` over exterior
/// points of `∂E_r`, with panels refined near every test point.
fn winding_calibration(ctx: &Context, seed: u64) -> Result<f64, String> {
    let cfg = &ctx.cfg.funcalc;
    let region = build_er(&ctx.e, ctx.cfg.r).map_err(err_string)?;
    let mut rng = stream_rng(seed, 3000);
    let inside = region.sample_interior(&mut rng, cfg.winding_points);
    let mut outside = Vec::with_capacity(cfg.winding_points);
    while outside.len() < cfg.winding_points {
        let z = c(rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5));
        if !region.contains_closed(z, 1e-9) && region.distance_to_boundary(z) > 1e-3 {
            outside.push(z);
        }
    }
    let inside: Vec<C64> = inside.into_iter().filter(|z| region.distance_to_boundary(*z) > 1e-3).collect();
    let avoid: Vec<C64> = inside.iter().chain(&outside).copied().collect();
    let quad = ContourQuadrature::adapted(&region, cfg.nodes_per_panel, &avoid);
    let worst_in = inside.iter().map(|z| (quad.winding(*z) - 1.0).norm()).fold(0.0, f64::max);
    let worst_out = outside.iter().map(|z| quad.winding(*z).norm()).fold(0.0, f64::max);
    Ok(worst_in.max(worst_out))
}
