use polycalc_core::dilation::{ando_dilation, schaffer_dilation, specific_dilation, DilationOptions};
use polycalc_core::instances::{gaussian_matrix, gen_dilation_tuple, gen_ritt_matrix, stream_rng};
use polycalc_core::multivar::{tuple_dilation, SimilarityOptions};
use polycalc_core::numerics::{c, identity, kron, opnorm};
use polycalc_core::polygonal::PointSetE;
use polycalc_core::CMatrix;

fn e2() -> PointSetE {
    PointSetE::from_angles(&[0.0, 2.5]).unwrap()
}

fn unit_norm(seed: u64, n: usize) -> CMatrix {
    let g = gaussian_matrix(&mut stream_rng(seed, 0), n, n);
    let norm = opnorm(&g);
    g / c(norm, 0.0)
}

/// `max_n ‖T^n − Q·V^n·J‖` with `V` assembled as a dense matrix.
fn dense_error(t: &CMatrix, v: &CMatrix, j: &CMatrix, q: &CMatrix, n_max: usize) -> f64 {
    let (mut w, mut tn) = (j.clone(), identity(t.nrows()));
    let mut worst = 0.0f64;
    for _ in 0..=n_max {
        worst = worst.max(opnorm(&(&tn - q * &w)));
        w = v * w;
        tn *= t;
    }
    worst
}

#[test]
fn ritt_dilation_reproduces_powers_through_dense_unitary() {
    let e = e2();
    for (seed, pc) in [(1, 0), (2, 1), (3, 2)] {
        let t = gen_ritt_matrix(&e, 0.5, 4, pc, 5.0, seed).unwrap();
        let dil = specific_dilation(&t, &e, 12, 1e-10).unwrap();
        // The monomial unitary acts on slot indices; the space is slots ⊗ ℂ^n.
        let v = kron(&dil.v.to_dense(), &identity(4));
        let gram = v.adjoint() * &v;
        assert!(opnorm(&(gram - identity(v.nrows()))) < 1e-12);
        let err = dense_error(&t, &v, &dil.j, &dil.q, 12);
        assert!(err < 1e-8, "seed {seed}: {err:e}");
        assert!((&dil.q * &dil.j - identity(4)).norm() < 1e-9);
        assert!(opnorm(&dil.q) * opnorm(&dil.j) >= 1.0 - 1e-12);
    }
}

#[test]
fn schaffer_handles_norm_one_contractions() {
    for seed in 0..4 {
        let t = unit_norm(seed, 4);
        let dil = schaffer_dilation(&t, 6).unwrap();
        let v = dil.v.to_dense();
        assert!(opnorm(&(v.adjoint() * &v - identity(v.nrows()))) < 1e-12);
        assert!(dense_error(&t, &v, &dil.j, &dil.q, 6) < 1e-12);
    }
}

#[test]
fn schaffer_rejects_non_contraction() {
    let t = identity(2) * c(1.1, 0.0);
    assert!(schaffer_dilation(&t, 3).is_err());
}

#[test]
fn ando_dilates_a_non_normal_commuting_pair() {
    let a = unit_norm(11, 3) * c(0.9, 0.0);
    let b = &a * c(0.5, 0.0) + &a * &a * c(0.4, 0.0);
    let b = &b / c(opnorm(&b).max(1.0), 0.0);
    let joint = ando_dilation(&a, &b, 5).unwrap();
    let err = joint.check(&[a, b], 5);
    assert!(err < 1e-8, "{err:e}");
    assert!(joint.commutation_defect() < 1e-10);
}

#[test]
fn triples_dilate_jointly() {
    let e = e2();
    for seed in 0..2 {
        let tuple = gen_dilation_tuple(3, 2, &e, 0.1, 0.9, 3.0, 40 + seed).unwrap();
        let opts = DilationOptions {
            tol: 1e-9,
            ..DilationOptions::default()
        };
        let td = tuple_dilation(&tuple.ops, &e, 6, &opts, &SimilarityOptions::default()).unwrap();
        assert!(td.joint.check(&tuple.ops, 6) < 1e-7);
        assert!(td.joint.commutation_defect() < 1e-10);
        assert!(td.part_errors.iter().all(|&x| x < 1e-8));
        assert!(td.joint.total_dim() <= 4096);
    }
}

#[test]
fn triples_need_three_operators() {
    let pair = vec![identity(2) * c(0.5, 0.0); 2];
    assert!(tuple_dilation(&pair, &e2(), 4, &DilationOptions::default(), &SimilarityOptions::default()).is_err());
}
