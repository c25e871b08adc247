//! Joint similarity to contractions on tuples that admit one by
//! construction, and refusal on a Jordan block.

use std::time::Instant;

use polycalc_core::instances::{derive_seed, gen_commuting_tuple, TupleSpec};
use polycalc_core::multivar::{joint_similarity, SimilarityResult};
use polycalc_core::numerics::{c, from_rows, identity, ONE, ZERO};
use polycalc_core::Error;

use super::{cycle_dim, err_string, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.similarity;
    let e = &ctx.e;
    let mut section = Section::new("similarity");
    let seed = ctx.section_seed(6);
    let max_d = ctx.cfg.caps.max_d.max(1);

    let start = Instant::now();
    // Diagonalizable tuples with spectra in the closed disc; every third one
    // carries peripheral eigenvalues from E.
    let rows: Vec<Result<(usize, usize, SimilarityResult), String>> = trials(cfg.tuples, |i| {
        let d = 1 + i % max_d;
        let dim = cycle_dim(i, 2, cfg.max_dim);
        let spec = if i % 3 == 2 {
            TupleSpec {
                e: Some(e.clone()),
                r: ctx.cfg.r,
                peripheral_count: peripheral_count(i / 3, e.len(), dim).max(1),
                cond_cap: cfg.cond_cap,
                ..TupleSpec::default()
            }
        } else {
            TupleSpec {
                radius: 0.95,
                cond_cap: cfg.cond_cap,
                ..TupleSpec::default()
            }
        };
        let ts = gen_commuting_tuple(d, dim, &spec, derive_seed(seed, i as u64)).map_err(err_string)?;
        let res = joint_similarity(&ts, &cfg.options).map_err(err_string)?;
        Ok((d, dim, res))
    });
    let jordan = [
        vec![from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]])],
        vec![
            from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]),
            identity(2) * c(0.5, 0.0),
        ],
    ];
    let refused: Vec<bool> = jordan
        .iter()
        .map(|ts| matches!(joint_similarity(ts, &cfg.options), Err(Error::Infeasible { .. })))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();

    let margins = project(&rows, |r| r.2.max_margin() - 1.0);
    section.check(Check::max_of("margin_minus_one", Some(8), &margins, cfg.margin_tol));
    let infeasible = rows.iter().filter(|r| !matches!(r, Ok((_, _, s)) if s.feasible)).count();
    section.check(Check::all("feasible_flag", Some(8), infeasible));
    let not_refused = refused.iter().filter(|ok| !**ok).count();
    section.check(Check::all("jordan_fixture_infeasible", Some(8), not_refused));
    section
        .timed_checks
        .push(Check::at_most("similarity_runtime_s", Some(8), elapsed, cfg.time_limit_s));

    let mut table = Table::new(
        "similarity",
        &["trial", "d", "dim", "method", "operator", "margin", "min_eigenvalue", "iterations"],
    );
    for (i, row) in rows.iter().enumerate() {
        let Ok((d, dim, res)) = row else { continue };
        let method = serde_json::to_value(res.method)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        for (k, m) in res.margins.iter().enumerate() {
            table.push(vec![
                cell(i),
                cell(d),
                cell(dim),
                method.clone(),
                cell(k),
                cell(m),
                cell(res.min_eigenvalue),
                cell(res.iterations),
            ]);
        }
    }
    section.table(table);
    section
}
