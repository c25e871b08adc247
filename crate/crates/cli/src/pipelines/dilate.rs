//! Single-operator dilations of Ritt_E matrices, Schäffer and Ando
//! dilations of contractions, and joint dilations of commuting triples.

use polycalc_core::dilation::{
    ando_dilation, dilation_check, schaffer_dilation, specific_dilation_from_parts, DilationOptions, TruncatedDilation,
};
use polycalc_core::ergodic::full_decomposition;
use polycalc_core::instances::{
    derive_seed, gaussian_matrix, gen_commuting_tuple, gen_dilation_tuple, gen_ritt_matrix, random_unitary,
    sample_disc, stream_rng, TupleSpec,
};
use polycalc_core::multivar::{joint_similarity, tuple_dilation_capped};
use polycalc_core::numerics::{diag, opnorm, CMatrix, C64};
use polycalc_core::Error;
use rand::Rng;

use super::{clamp_norm, cycle_dim, err_string, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

struct RittRow {
    dim: usize,
    pc: usize,
    k_max: usize,
    space_dim: usize,
    errors: Vec<f64>,
    unitarity: f64,
    /// `(window, error)` for the window-doubling test.
    windows: [(usize, f64); 2],
    halves: bool,
}

pub fn run(ctx: &Context) -> Section {
    let mut section = Section::new("dilate");
    let seed = ctx.section_seed(4);
    ritt_dilations(ctx, seed, &mut section);
    contraction_dilations(ctx, seed, &mut section);
    joint_dilations(ctx, seed, &mut section);
    section
}

fn ritt_dilations(ctx: &Context, seed: u64, section: &mut Section) {
    let cfg = &ctx.cfg.dilate;
    let e = &ctx.e;
    let rows: Vec<Result<RittRow, String>> = trials(cfg.matrices, |i| {
        let dim = cycle_dim(i, 1, cfg.max_dim);
        let pc = peripheral_count(i, e.len(), dim);
        let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, cfg.cond_cap, derive_seed(seed, i as u64)).map_err(err_string)?;
        ritt_trial(&t, ctx, dim, pc).map_err(err_string)
    });
    let errors = project(&rows, |r| r.errors.iter().copied().fold(0.0, f64::max));
    section.check(Check::max_of("ritt_dilation_error", Some(4), &errors, cfg.tol));
    let unitarity = project(&rows, |r| r.unitarity);
    section.check(Check::max_of("ritt_v_unitarity", Some(4), &unitarity, cfg.unitary_tol));
    let halving = rows.iter().filter(|r| !matches!(r, Ok(row) if row.halves)).count();
    section.check(Check::all("window_doubling_halves_error", Some(4), halving));
    let covered: Vec<usize> = rows.iter().filter_map(|r| r.as_ref().ok().map(|r| r.pc)).collect();
    for want in 1..=e.len().min(2) {
        let ok = covered.contains(&want);
        section.check(Check::flag(
            &format!("covers_{want}_peripheral"),
            Some(4),
            ok,
            (!ok).then(|| format!("no instance with {want} peripheral eigenvalues")),
        ));
    }

    let mut errs = Table::new("dilate_errors", &["instance", "dim", "peripheral_count", "n", "error"]);
    let mut wins = Table::new("dilate_windows", &["instance", "k_max", "window", "error"]);
    let mut dims = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let Ok(r) = row else { continue };
        dims.push(r.space_dim);
        for (n, err) in r.errors.iter().enumerate() {
            errs.push(vec![cell(i), cell(r.dim), cell(r.pc), cell(n), cell(err)]);
        }
        for (w, err) in r.windows {
            wins.push(vec![cell(i), cell(r.k_max), cell(w), cell(err)]);
        }
    }
    section.metric("ritt_dilation_space_dims", dims);
    section.table(errs);
    section.table(wins);
}

fn ritt_trial(t: &CMatrix, ctx: &Context, dim: usize, pc: usize) -> polycalc_core::Result<RittRow> {
    let cfg = &ctx.cfg.dilate;
    let e = &ctx.e;
    let opts = cfg.options;
    let dec = full_decomposition(t, e, opts.cesaro_length, opts.projection_tol)?;
    let dec_adj = full_decomposition(&t.adjoint(), &e.conj(), opts.cesaro_length, opts.projection_tol)?;
    let build = |k_max: Option<usize>| -> polycalc_core::Result<TruncatedDilation> {
        let o = DilationOptions { k_max, ..opts };
        specific_dilation_from_parts(t, e, cfg.n_max, &o, &dec, &dec_adj)
    };
    let dil = build(None)?;
    let errors = dil.errors(t, cfg.n_max);
    let k0 = (dil.k_max / 4).max(e.len());
    let e0 = dilation_check(&build(Some(k0))?, t, cfg.n_max);
    let e1 = dilation_check(&build(Some(2 * k0))?, t, cfg.n_max);
    let halves = e1 <= 0.5 * e0 || e0.max(e1) <= cfg.noise_floor;
    Ok(RittRow {
        dim,
        pc,
        k_max: dil.k_max,
        space_dim: dil.space_dim(),
        errors,
        unitarity: dil.unitarity_defect(),
        windows: [(k0, e0), (2 * k0, e1)],
        halves,
    })
}

/// Contraction `G/‖G‖·ρ`.
fn random_contraction<R: Rng>(rng: &mut R, n: usize, rho: f64) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let norm = opnorm(&g);
    g * C64::from(rho / norm)
}

/// Commuting pair of contractions of one of three kinds: a normal pair
/// (doubly commuting), a contraction and a polynomial in it, or the
/// similarity image of a generated commuting pair.
fn contraction_pair(kind: usize, dim: usize, seed: u64) -> polycalc_core::Result<(CMatrix, CMatrix)> {
    let mut rng = stream_rng(seed, 0);
    match kind {
        0 => {
            let u = random_unitary(&mut rng, dim);
            let draw = |rng: &mut _| {
                let l: Vec<C64> = (0..dim).map(|_| sample_disc(rng, 1.0)).collect();
                &u * diag(&l) * u.adjoint()
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            Ok((a, b))
        }
        1 => {
            let a = random_contraction(&mut rng, dim, 0.9);
            let p = &a * C64::from(0.5) + &a * &a * C64::from(0.4);
            let norm = opnorm(&p).max(1.0);
            Ok((a, p / C64::from(norm)))
        }
        _ => {
            let spec = TupleSpec {
                radius: 0.9,
                cond_cap: 5.0,
                ..TupleSpec::default()
            };
            let ts = gen_commuting_tuple(2, dim, &spec, seed)?;
            let sim = joint_similarity(&ts, &Default::default())?;
            Ok((clamp_norm(sim.conjugate(&ts[0])), clamp_norm(sim.conjugate(&ts[1]))))
        }
    }
}

struct AndoRow {
    kind: usize,
    dim: usize,
    total_dim: usize,
    error: f64,
    commutation: f64,
    unitary: bool,
    unitarity: f64,
}

fn contraction_dilations(ctx: &Context, seed: u64, section: &mut Section) {
    let sc = &ctx.cfg.dilate.schaffer;
    let schaffer: Vec<Result<(f64, f64), String>> = trials(sc.instances, |i| {
        let dim = cycle_dim(i, 1, sc.max_dim);
        let rho = if i % 2 == 0 { 1.0 } else { 0.8 };
        let t = random_contraction(&mut stream_rng(derive_seed(seed, 30_000 + i as u64), 0), dim, rho);
        let dil = schaffer_dilation(&t, sc.budget).map_err(err_string)?;
        Ok((dilation_check(&dil, &t, sc.budget), dil.unitarity_defect()))
    });
    let errs: Vec<Result<f64, String>> = schaffer.iter().map(|r| r.clone().map(|v| v.0)).collect();
    let unit: Vec<Result<f64, String>> = schaffer.iter().map(|r| r.clone().map(|v| v.1)).collect();
    section.check(Check::max_of("schaffer_error", Some(5), &errs, sc.tol));
    section.check(Check::max_of("schaffer_unitarity", Some(5), &unit, sc.tol));

    let an = &ctx.cfg.dilate.ando;
    let rows: Vec<Result<AndoRow, String>> = trials(an.pairs, |i| {
        let kind = i % 3;
        let dim = cycle_dim(i / 3, 2, an.max_dim);
        let (a, b) = contraction_pair(kind, dim, derive_seed(seed, 40_000 + i as u64)).map_err(err_string)?;
        let pair = [a, b];
        let jd = ando_dilation(&pair[0], &pair[1], an.budget).map_err(err_string)?;
        Ok(AndoRow {
            kind,
            dim,
            total_dim: jd.total_dim(),
            error: jd.check(&pair, an.budget),
            commutation: jd.commutation_defect(),
            unitary: jd.unitary,
            unitarity: if jd.unitary { jd.unitarity_defect() } else { 0.0 },
        })
    });
    section.check(Check::max_of("ando_error", Some(5), &project(&rows, |r| r.error), an.tol));
    section.check(Check::max_of(
        "ando_commutation",
        Some(5),
        &project(&rows, |r| r.commutation),
        an.commute_tol,
    ));
    section.check(Check::max_of(
        "ando_unitarity_doubly_commuting",
        Some(5),
        &project(&rows, |r| r.unitarity),
        an.commute_tol,
    ));
    let mut table = Table::new(
        "ando",
        &["pair", "kind", "dim", "total_dim", "error", "commutation_defect", "unitary"],
    );
    for (i, row) in rows.iter().enumerate() {
        if let Ok(r) = row {
            table.push(vec![
                cell(i),
                cell(r.kind),
                cell(r.dim),
                cell(r.total_dim),
                cell(r.error),
                cell(r.commutation),
                cell(r.unitary),
            ]);
        }
    }
    section.table(table);
}

struct JointRow {
    dim: usize,
    slot_dims: Vec<usize>,
    error: f64,
    norm_product: f64,
    commutation: f64,
    unitary: bool,
    part_errors: Vec<f64>,
}

fn joint_dilations(ctx: &Context, seed: u64, section: &mut Section) {
    let cfg = &ctx.cfg.dilate;
    let jc = &cfg.joint;
    let rows: Vec<Result<JointRow, String>> = trials(jc.tuples, |i| {
        let dim = cycle_dim(i, 2, jc.max_dim);
        let g = gen_dilation_tuple(
            jc.d,
            dim,
            &ctx.e,
            jc.lead_radius,
            jc.tail_radius,
            jc.cond_cap,
            derive_seed(seed, 50_000 + i as u64),
        )
        .map_err(err_string)?;
        let td = tuple_dilation_capped(
            &g.ops,
            &ctx.e,
            jc.budget,
            &cfg.options,
            &ctx.cfg.similarity.options,
            ctx.cfg.caps.kron_cap,
        )
        .map_err(|err| match err {
            Error::DimensionOverflow { dim, cap } => format!("tensor space of dimension {dim} exceeds the cap {cap}"),
            other => other.to_string(),
        })?;
        Ok(JointRow {
            dim,
            slot_dims: td.joint.slot_dims.clone(),
            error: td.joint.check(&g.ops, jc.budget),
            norm_product: td.joint.norm_product(),
            commutation: td.joint.commutation_defect(),
            unitary: td.joint.unitary,
            part_errors: td.part_errors,
        })
    });
    section.check(Check::max_of("joint_dilation_error", Some(6), &project(&rows, |r| r.error), jc.tol));
    let jq: Vec<Option<f64>> = rows.iter().map(|r| r.as_ref().ok().map(|r| r.norm_product)).collect();
    section.metric("joint_norm_products", jq);
    let mut table = Table::new(
        "joint",
        &["tuple", "dim", "slot_dims", "error", "norm_j_times_norm_q", "commutation_defect", "unitary", "part_errors"],
    );
    for (i, row) in rows.iter().enumerate() {
        if let Ok(r) = row {
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x");
            table.push(vec![
                cell(i),
                cell(r.dim),
                join(&r.slot_dims),
                cell(r.error),
                cell(r.norm_product),
                cell(r.commutation),
                cell(r.unitary),
                r.part_errors.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            ]);
        }
    }
    section.table(table);
}
