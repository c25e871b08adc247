//! One pipeline per subcommand. Each section draws its randomness from its
//! own stream of the master seed, so a section gives the same numbers
//! whether it runs alone or inside the full suite.

pub mod classify;
pub mod coeffs;
pub mod dilate;
pub mod funcalc;
pub mod similarity;
pub mod squarefn;
pub mod vn;

use polycalc_core::instances::derive_seed;
use polycalc_core::numerics::{opnorm, CMatrix, C64};
use polycalc_core::polygonal::PointSetE;
use rayon::prelude::*;

use crate::config::ExperimentConfig;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub e: PointSetE,
}

impl Context {
    pub fn section_seed(&self, stream: u64) -> u64 {
        derive_seed(self.cfg.seed, stream)
    }
}

/// Runs `f(0), …, f(n − 1)` concurrently; results stay in index order.
pub(crate) fn trials<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// `lo, lo + 1, …, hi, lo, …` indexed by `i` (clamped to `hi`).
pub(crate) fn cycle_dim(i: usize, lo: usize, hi: usize) -> usize {
    if hi <= lo {
        hi
    } else {
        lo + i % (hi - lo + 1)
    }
}

/// `0, 1, …, min(n, cap), 0, …` indexed by `i`.
pub(crate) fn peripheral_count(i: usize, n: usize, cap: usize) -> usize {
    i % (n.min(cap) + 1)
}

pub(crate) fn err_string(err: impl std::fmt::Display) -> String {
    err.to_string()
}

/// Maps successful trial rows to one measured quantity.
pub(crate) fn project<T>(rows: &[Result<T, String>], f: impl Fn(&T) -> f64) -> Vec<Result<f64, String>> {
    rows.iter().map(|r| r.as_ref().map(&f).map_err(Clone::clone)).collect()
}

/// Rescales to norm one when rounding left the norm slightly above it.
pub(crate) fn clamp_norm(m: CMatrix) -> CMatrix {
    let norm = opnorm(&m);
    if norm > 1.0 {
        m / C64::from(norm)
    } else {
        m
    }
}
