//! Generator soundness (Ritt_E verdicts, commuting tuples) and the ergodic
//! decomposition identities.

use polycalc_core::ergodic::full_decomposition;
use polycalc_core::instances::{derive_seed, gen_commuting_tuple, gen_ritt_matrix, TupleSpec};
use polycalc_core::numerics::{commutator_norm, opnorm};
use polycalc_core::polygonal::{classify_ritt, ResolventSample, Verdict};

use super::{cycle_dim, err_string, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

struct ClassifyRow {
    dim: usize,
    pc: usize,
    verdict: Verdict,
    m_estimate: f64,
    m_coarse: f64,
}

struct ErgodicRow {
    dim: usize,
    pc: usize,
    algebra: f64,
    bicommutant: f64,
}

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.classify;
    let e = &ctx.e;
    let mut section = Section::new("classify");
    let seed = ctx.section_seed(2);

    let rows: Vec<Result<(ClassifyRow, Vec<ResolventSample>), String>> = trials(cfg.matrices, |i| {
        let dim = cycle_dim(i, 1, cfg.max_dim);
        let pc = peripheral_count(i, e.len(), dim);
        let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, cfg.cond_cap, derive_seed(seed, i as u64)).map_err(err_string)?;
        let cert = classify_ritt(&t, e, &cfg.grid);
        let samples = if i == 0 { cert.samples.clone() } else { Vec::new() };
        Ok((
            ClassifyRow {
                dim,
                pc,
                verdict: cert.verdict,
                m_estimate: cert.m_estimate,
                m_coarse: cert.m_coarse,
            },
            samples,
        ))
    });
    let failures = rows
        .iter()
        .filter(|r| !matches!(r, Ok((row, _)) if row.verdict == Verdict::Pass))
        .count();
    section.check(Check::all("generated_matrices_classify_pass", None, failures));
    let mut table = Table::new(
        "classify",
        &["instance", "dim", "peripheral_count", "verdict", "m_estimate", "m_coarse"],
    );
    for (i, r) in rows.iter().enumerate() {
        match r {
            Ok((row, _)) => table.push(vec![
                cell(i),
                cell(row.dim),
                cell(row.pc),
                cell(format!("{:?}", row.verdict).to_lowercase()),
                cell(row.m_estimate),
                cell(row.m_coarse),
            ]),
            Err(err) => table.push(vec![cell(i), String::new(), String::new(), cell(format!("error: {err}")), String::new(), String::new()]),
        }
    }
    section.table(table);
    if let Some(Ok((_, samples))) = rows.first() {
        let mut cert = Table::new("classify_certificate", &["re_z", "im_z", "resolvent_norm", "weighted_value"]);
        for s in samples {
            cert.push(vec![cell(s.z.re), cell(s.z.im), cell(s.resolvent_norm), cell(s.weighted())]);
        }
        section.table(cert);
    }

    let max_d = ctx.cfg.caps.max_d.max(2);
    let commutators: Vec<Result<f64, String>> = trials(cfg.tuples, |i| {
        let d = 2 + i % (max_d - 1);
        let dim = cycle_dim(i, 2, cfg.tuple_max_dim);
        let spec = TupleSpec {
            e: Some(e.clone()),
            r: ctx.cfg.r,
            peripheral_count: peripheral_count(i, e.len(), dim),
            cond_cap: cfg.cond_cap,
            ..TupleSpec::default()
        };
        let ts = gen_commuting_tuple(d, dim, &spec, derive_seed(seed, 10_000 + i as u64)).map_err(err_string)?;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a + 1..d {
                let scale = (opnorm(&ts[a]) * opnorm(&ts[b])).max(1.0);
                worst = worst.max(commutator_norm(&ts[a], &ts[b]) / scale);
            }
        }
        Ok(worst)
    });
    section.check(Check::max_of("generated_tuples_commute", None, &commutators, cfg.commute_tol));

    let ergodic: Vec<Result<ErgodicRow, String>> = trials(cfg.ergodic_instances, |i| {
        let dim = cycle_dim(i, 1, cfg.ergodic_max_dim);
        let pc = peripheral_count(i, e.len(), dim);
        let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, cfg.cond_cap, derive_seed(seed, 20_000 + i as u64))
            .map_err(err_string)?;
        let dec = full_decomposition(&t, e, cfg.cesaro_length, cfg.projection_tol).map_err(err_string)?;
        Ok(ErgodicRow {
            dim,
            pc,
            algebra: dec.algebra_defect(),
            bicommutant: dec.bicommutant_defect(),
        })
    });
    let algebra = project(&ergodic, |r| r.algebra);
    let bicommutant = project(&ergodic, |r| r.bicommutant);
    section.check(Check::max_of("projection_algebra_defect", Some(3), &algebra, cfg.algebra_tol));
    section.check(Check::max_of("bicommutant_defect", Some(3), &bicommutant, cfg.bicommutant_tol));
    let mut table = Table::new(
        "ergodic",
        &["instance", "dim", "peripheral_count", "algebra_defect", "bicommutant_defect"],
    );
    for (i, row) in ergodic.iter().enumerate() {
        if let Ok(row) = row {
            table.push(vec![cell(i), cell(row.dim), cell(row.pc), cell(row.algebra), cell(row.bicommutant)]);
        }
    }
    section.table(table);
    section
}
