use polycalc_core::funcalc::{polygonal_calculus, FuncalcOptions};
use polycalc_core::instances::{gen_commuting_tuple, gen_ritt_matrix, random_unitary, stream_rng, TupleSpec};
use polycalc_core::multivar::{eval_multipoly, joint_similarity, vn_ratio, MultiPoly, SimilarityOptions, SupDomain};
use polycalc_core::numerics::{c, diag, from_rows, opnorm, ONE, ZERO};
use polycalc_core::polygonal::PointSetE;
use polycalc_core::{CMatrix, Error};
use proptest::prelude::*;

fn e2() -> PointSetE {
    PointSetE::from_angles(&[0.0, 2.5]).unwrap()
}

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    opnorm(&(a - b)) / opnorm(b).max(1.0)
}

#[test]
fn contour_calculus_is_multiplicative() {
    let e = e2();
    let opts = FuncalcOptions::default();
    for seed in 0..3 {
        let t = gen_ritt_matrix(&e, 0.5, 5, seed as usize % 3, 5.0, seed).unwrap();
        let mut rng = stream_rng(seed, 9);
        let (p, q) = (MultiPoly::random(&mut rng, 1, 6), MultiPoly::random(&mut rng, 1, 5));
        let fp = polygonal_calculus(&p, &t, &e, 0.5, &opts).unwrap();
        let fq = polygonal_calculus(&q, &t, &e, 0.5, &opts).unwrap();
        let fpq = polygonal_calculus(&p.mul(&q), &t, &e, 0.5, &opts).unwrap();
        assert!(rel(&fpq, &(&fp * &fq)) < 1e-8);
        let direct = eval_multipoly(&p, std::slice::from_ref(&t)).unwrap();
        assert!(rel(&fp, &direct) < 1e-8);
    }
}

#[test]
fn doubling_nodes_changes_nothing() {
    let e = e2();
    let t = gen_ritt_matrix(&e, 0.5, 4, 1, 5.0, 21).unwrap();
    let phi = MultiPoly::random(&mut stream_rng(21, 1), 1, 12);
    let coarse = FuncalcOptions {
        nodes_per_panel: 24,
        ..FuncalcOptions::default()
    };
    let fine = FuncalcOptions {
        nodes_per_panel: 48,
        ..FuncalcOptions::default()
    };
    let a = polygonal_calculus(&phi, &t, &e, 0.5, &coarse).unwrap();
    let b = polygonal_calculus(&phi, &t, &e, 0.5, &fine).unwrap();
    assert!(rel(&a, &b) < 1e-9);
}

#[test]
fn product_grid_matches_pointwise_evaluation() {
    let phi = MultiPoly::random(&mut stream_rng(5, 0), 2, 6);
    let xs = vec![c(0.3, 0.1), c(-0.7, 0.2), c(0.0, 1.0)];
    let ys = vec![c(1.0, 0.0), c(0.2, -0.9)];
    let grid = phi.eval_product_grid(&[xs.clone(), ys.clone()]);
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            assert!((grid[i * ys.len() + j] - phi.eval(&[*x, *y])).norm() < 1e-12);
        }
    }
}

#[test]
fn vn_ratio_is_unitarily_invariant() {
    let spec = TupleSpec {
        radius: 0.8,
        cond_cap: 3.0,
        ..TupleSpec::default()
    };
    let ts = gen_commuting_tuple(2, 3, &spec, 8).unwrap();
    let u = random_unitary(&mut stream_rng(8, 2), 3);
    let rotated: Vec<CMatrix> = ts.iter().map(|t| &u * t * u.adjoint()).collect();
    let phi = MultiPoly::random(&mut stream_rng(8, 3), 2, 4);
    let domain = SupDomain::Torus { grid_per_dim: 256 };
    let a = vn_ratio(&ts, &phi, &domain).unwrap();
    let b = vn_ratio(&rotated, &phi, &domain).unwrap();
    assert!((a.ratio - b.ratio).abs() < 1e-10 * a.ratio.max(1.0));
    assert_eq!(a.sup_norm, b.sup_norm);
}

#[test]
fn similarity_handles_peripheral_and_non_normal_parts() {
    // A unimodular eigenvalue next to a non-normal block with spectral
    // radius below one, paired with its own square.
    let t = from_rows(&[
        vec![ONE, ZERO, ZERO],
        vec![ZERO, c(0.3, 0.0), c(2.0, 0.0)],
        vec![ZERO, ZERO, c(-0.4, 0.1)],
    ]);
    let s = &t * &t;
    let res = joint_similarity(&[t.clone(), s.clone()], &SimilarityOptions::default()).unwrap();
    assert!(res.feasible);
    assert!(res.max_margin() <= 1.0 + 1e-8);
    assert!(opnorm(&res.conjugate(&t)) <= 1.0 + 1e-8);
}

#[test]
fn jordan_block_is_infeasible() {
    let j = from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
    let res = joint_similarity(&[j], &SimilarityOptions::default());
    assert!(matches!(res, Err(Error::Infeasible { .. })), "{res:?}");
}

proptest! {
    #[test]
    fn polynomial_products_evaluate_pointwise(seed in 0u64..1000, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let mut rng = stream_rng(seed, 0);
        let p = MultiPoly::random(&mut rng, 2, 3);
        let q = MultiPoly::random(&mut rng, 2, 4);
        let z = [c(re, im), c(im, -re)];
        let lhs = p.mul(&q).eval(&z);
        let rhs = p.eval(&z) * q.eval(&z);
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn matrix_evaluation_of_scalars_matches(seed in 0u64..1000, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let p = MultiPoly::random(&mut stream_rng(seed, 1), 2, 3);
        let (x, y) = (c(re, im), c(0.5 * im, re));
        let m = eval_multipoly(&p, &[diag(&[x]), diag(&[y])]).unwrap();
        let want = p.eval(&[x, y]);
        prop_assert!((m[(0, 0)] - want).norm() <= 1e-11 * (1.0 + want.norm()));
    }
}
