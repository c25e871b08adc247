//! Shared fixtures for the criterion benchmarks in `benches/`.

use polycalc_core::instances::gen_ritt_matrix;
use polycalc_core::polygonal::PointSetE;
use polycalc_core::CMatrix;

/// Two-point set used across benchmarks.
pub fn bench_set() -> PointSetE {
    PointSetE::from_angles(&[0.0, 2.5]).expect("valid angles")
}

/// Ritt matrix of the given size with one peripheral eigenvalue.
pub fn bench_matrix(dim: usize) -> CMatrix {
    gen_ritt_matrix(&bench_set(), 0.5, dim, 1, 5.0, 7).expect("generator succeeds")
}
