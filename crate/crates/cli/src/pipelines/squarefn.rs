//! Square functions `‖x‖_T` of generated Ritt_E matrices and empirical
//! constants `C` in `‖x‖_T ≤ C‖x‖`.

use polycalc_core::instances::{derive_seed, gen_ritt_matrix, random_unit_vector, stream_rng};
use polycalc_core::numerics::vec_norm;
use polycalc_core::squarefn::{sectorial_factor, square_constant_estimate, square_function_with_factor};

use super::{cycle_dim, err_string, peripheral_count, project, trials, Context};
use crate::report::{cell, Check, Section, Table};

struct Row {
    dim: usize,
    pc: usize,
    value: f64,
    first_term: f64,
    truncation: usize,
    tail_ratio: f64,
    constant: f64,
}

pub fn run(ctx: &Context) -> Section {
    let cfg = &ctx.cfg.squarefn;
    let e = &ctx.e;
    let mut section = Section::new("squarefn");
    let seed = ctx.section_seed(3);

    let rows: Vec<Result<Row, String>> = trials(cfg.instances, |i| {
        let dim = cycle_dim(i, 1, cfg.max_dim);
        let pc = peripheral_count(i, e.len(), dim);
        let s = derive_seed(seed, i as u64);
        let t = gen_ritt_matrix(e, ctx.cfg.r, dim, pc, cfg.cond_cap, s).map_err(err_string)?;
        let a = sectorial_factor(&t, e).map_err(err_string)?;
        let x = random_unit_vector(&mut stream_rng(s, 1), dim);
        let rep = square_function_with_factor(&t, &a, &x, cfg.tol).map_err(err_string)?;
        let constant = square_constant_estimate(&t, e, cfg.trials, s, cfg.tol).map_err(err_string)?;
        Ok(Row {
            dim,
            pc,
            value: rep.value,
            first_term: vec_norm(&(&a * &x)),
            truncation: rep.truncation,
            tail_ratio: if rep.value > 0.0 { rep.tail_bound / (rep.value * rep.value) } else { 0.0 },
            constant,
        })
    });

    // The k = 0 term alone bounds the square function from below.
    let lower = project(&rows, |r| r.first_term - r.value);
    section.check(Check::max_of("first_term_lower_bound", None, &lower, 1e-12));
    let tails = project(&rows, |r| r.tail_ratio);
    section.check(Check::max_of("relative_tail_bound", None, &tails, 1e-8));
    let constants = project(&rows, |r| if r.constant.is_finite() { 0.0 } else { f64::INFINITY });
    section.check(Check::max_of("constant_estimates_finite", None, &constants, 0.0));

    let mut table = Table::new(
        "squarefn",
        &["instance", "dim", "peripheral_count", "value", "truncation", "tail_ratio", "constant_estimate"],
    );
    for (i, row) in rows.iter().enumerate() {
        if let Ok(r) = row {
            table.push(vec![
                cell(i),
                cell(r.dim),
                cell(r.pc),
                cell(r.value),
                cell(r.truncation),
                cell(r.tail_ratio),
                cell(r.constant),
            ]);
        }
    }
    section.table(table);
    section
}
