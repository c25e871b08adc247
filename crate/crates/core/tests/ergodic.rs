use polycalc_core::ergodic::{decompose_vector, eigen_projection, full_decomposition};
use polycalc_core::instances::{gen_ritt_matrix, random_unit_vector, stream_rng};
use polycalc_core::numerics::opnorm;
use polycalc_core::polygonal::{classify_ritt, PointSetE, Verdict};
use polycalc_core::CVector;

#[test]
fn cesaro_projections_match_spectral_projections() {
    let e = PointSetE::from_angles(&[0.0, 2.5, 4.2]).unwrap();
    for seed in 0..4 {
        let t = gen_ritt_matrix(&e, 0.5, 6, 3, 4.0, 100 + seed).unwrap();
        let dec = full_decomposition(&t, &e, 1 << 16, 1e-10).unwrap();
        assert!(dec.algebra_defect() < 1e-10);
        assert!(dec.bicommutant_defect() < 1e-9);
        for (p, xi) in dec.projections.iter().zip(e.points()) {
            let spectral = eigen_projection(&t, *xi).unwrap();
            assert!(opnorm(&(p - spectral)) < 1e-8, "seed {seed}");
            // T acts on Ker(I − ξ̄T) as multiplication by ξ.
            assert!(opnorm(&(&t * p - p * *xi)) < 1e-8);
        }
    }
}

#[test]
fn vector_components_add_up() {
    let e = PointSetE::from_angles(&[0.0, 2.5]).unwrap();
    let t = gen_ritt_matrix(&e, 0.5, 5, 2, 4.0, 7).unwrap();
    let dec = full_decomposition(&t, &e, 1 << 16, 1e-10).unwrap();
    let x = random_unit_vector(&mut stream_rng(7, 1), 5);
    let parts = decompose_vector(&dec, &x);
    assert_eq!(parts.len(), e.len() + 1);
    let total = parts.iter().fold(CVector::zeros(5), |acc, p| acc + p);
    assert!((total - x).norm() < 1e-10);
}

#[test]
fn generated_matrices_classify_as_ritt() {
    let e = PointSetE::from_angles(&[0.0, 2.5]).unwrap();
    let grid = polycalc_core::instances::generator_grid();
    for seed in 0..3 {
        let t = gen_ritt_matrix(&e, 0.5, 4, 1, 5.0, seed).unwrap();
        assert_eq!(classify_ritt(&t, &e, &grid).verdict, Verdict::Pass);
    }
}
