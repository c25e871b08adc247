//! Generalized von Neumann ratios `‖φ(T)‖/‖φ‖_{∞,T^d}` against the
//! measured dilation constant `‖J‖‖Q‖`.

use polycalc_core::dilation::{ando_dilation, specific_dilation_with};
use polycalc_core::instances::{
    derive_seed, gaussian_matrix, gen_commuting_tuple, gen_dilation_tuple, gen_ritt_matrix, stream_rng, TupleSpec,
};
use polycalc_core::multivar::{joint_similarity, tuple_dilation_capped, vn_ratio, MultiPoly, SupDomain};
use polycalc_core::numerics::{opnorm, CMatrix, C64};

use super::{clamp_norm, cycle_dim, err_string, peripheral_count, trials, Context};
use crate::report::{cell, Check, Section, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    RittSingle,
    Contraction,
    Pair,
    Triple,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::RittSingle => "ritt_single",
            Family::Contraction => "contraction",
            Family::Pair => "pair",
            Family::Triple => "triple",
        }
    }

    fn d(self) -> usize {
        match self {
            Family::RittSingle | Family::Contraction => 1,
            Family::Pair => 2,
            Family::Triple => 3,
        }
    }
}

/// A tuple with the constant its ratios are held to and the error of the
/// dilation identity behind it.
struct Instance {
    ops: Vec<CMatrix>,
    bound: f64,
    identity_error: f64,
}

struct TupleRow {
    family: Family,
    bound: f64,
    identity_error: f64,
    /// `(degree, ratio)` per polynomial.
    ratios: Vec<(usize, f64)>,
}

impl TupleRow {
    fn max_ratio(&self) -> f64 {
        self.ratios.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.vn;
    let mut section = Section::new("vn");
    let seed = ctx.section_seed(5);
    let mut jobs = Vec::new();
    for (family, count) in [
        (Family::RittSingle, cfg.ritt_singles),
        (Family::Contraction, cfg.contractions),
        (Family::Pair, cfg.pairs),
        (Family::Triple, cfg.triples),
    ] {
        jobs.extend((0..count).map(|i| (family, i)));
    }
    let rows: Vec<Result<TupleRow, String>> = trials(jobs.len(), |j| {
        let (family, i) = jobs[j];
        let s = derive_seed(seed, j as u64);
        let inst = instance(ctx, family, i, s).map_err(err_string)?;
        let d = family.d();
        let domain = SupDomain::Torus {
            grid_per_dim: cfg.torus_grid[d - 1],
        };
        let mut ratios = Vec::with_capacity(cfg.polys_per_tuple);
        for p in 0..cfg.polys_per_tuple {
            let degree = 1 + p % cfg.deg_max;
            let phi = MultiPoly::random(&mut stream_rng(s, 1 + p as u64), d, degree);
            let r = vn_ratio(&inst.ops, &phi, &domain).map_err(err_string)?;
            ratios.push((degree, r.ratio));
        }
        Ok(TupleRow {
            family,
            bound: inst.bound,
            identity_error: inst.identity_error,
            ratios,
        })
    });

    let excess = |want: fn(Family) -> bool| -> Vec<Result<f64, String>> {
        rows.iter()
            .zip(&jobs)
            .filter(|(_, (f, _))| want(*f))
            .map(|(r, _)| r.as_ref().map(|r| r.max_ratio() - r.bound).map_err(Clone::clone))
            .collect()
    };
    section.check(Check::max_of(
        "ratio_minus_jq",
        Some(7),
        &excess(|f| f != Family::Contraction),
        cfg.slack,
    ));
    section.check(Check::max_of(
        "contraction_ratio_minus_one",
        Some(7),
        &excess(|f| f == Family::Contraction),
        cfg.contraction_slack,
    ));
    let identity: Vec<Option<f64>> = rows.iter().map(|r| r.as_ref().ok().map(|r| r.identity_error)).collect();
    section.metric("dilation_identity_errors", identity);

    let mut summary = Table::new("vn_tuples", &["tuple", "family", "d", "max_ratio", "bound", "identity_error"]);
    let mut detail = Table::new("vn", &["tuple", "family", "trial", "degree", "ratio"]);
    for (j, row) in rows.iter().enumerate() {
        let Ok(r) = row else { continue };
        summary.push(vec![
            cell(j),
            cell(r.family.name()),
            cell(r.family.d()),
            cell(r.max_ratio()),
            cell(r.bound),
            cell(r.identity_error),
        ]);
        for (p, (deg, ratio)) in r.ratios.iter().enumerate() {
            detail.push(vec![cell(j), cell(r.family.name()), cell(p), cell(deg), cell(ratio)]);
        }
    }
    section.table(summary);
    section.table(detail);
    section
}

fn instance(ctx: &Context, family: Family, i: usize, seed: u64) -> polycalc_core::Result<Instance> {
    let cfg = &ctx.cfg.vn;
    let e = &ctx.e;
    let budget = cfg.deg_max;
    let dim = cycle_dim(i, 2, cfg.max_dim);
    match family {
        Family::RittSingle => {
            let pc = peripheral_count(i, e.len(), dim);
            let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, cfg.cond_cap, seed)?;
            let dil = specific_dilation_with(&t, e, budget, &ctx.cfg.dilate.options)?;
            let err = polycalc_core::dilation::dilation_check(&dil, &t, budget);
            Ok(Instance {
                bound: opnorm(&dil.j) * opnorm(&dil.q),
                identity_error: err,
                ops: vec![t],
            })
        }
        Family::Contraction => {
            let g = gaussian_matrix(&mut stream_rng(seed, 0), dim, dim);
            let norm = opnorm(&g);
            Ok(Instance {
                ops: vec![g / C64::from(norm)],
                bound: 1.0,
                identity_error: 0.0,
            })
        }
        Family::Pair => {
            let spec = TupleSpec {
                radius: cfg.tail_radius,
                cond_cap: cfg.cond_cap,
                ..TupleSpec::default()
            };
            let ops = gen_commuting_tuple(2, dim, &spec, seed)?;
            let sim = joint_similarity(&ops, &ctx.cfg.similarity.options)?;
            let c1 = clamp_norm(sim.conjugate(&ops[0]));
            let c2 = clamp_norm(sim.conjugate(&ops[1]));
            let jd = ando_dilation(&c1, &c2, budget)?.conjugated(&sim.s_inv, &sim.s);
            Ok(Instance {
                bound: jd.norm_product(),
                identity_error: jd.check(&ops, budget),
                ops,
            })
        }
        Family::Triple => {
            let dim = cycle_dim(i, 2, cfg.max_dim.min(3));
            let g = gen_dilation_tuple(3, dim, e, cfg.lead_radius, cfg.tail_radius, cfg.cond_cap, seed)?;
            let td = tuple_dilation_capped(
                &g.ops,
                e,
                budget,
                &ctx.cfg.dilate.options,
                &ctx.cfg.similarity.options,
                ctx.cfg.caps.kron_cap,
            )?;
            Ok(Instance {
                bound: td.joint.norm_product(),
                identity_error: td.joint.check(&g.ops, budget),
                ops: g.ops,
            })
        }
    }
}
