use polycalc_core::numerics::{c, C64};
use polycalc_core::polygonal::PointSetE;
use polycalc_core::taylor::{a_coeffs_recursive, a_from_beta, beta_weights, c_coeffs, TaylorCoeffs};

/// Power series of `1/∏(1 − ξ̄z)` as a product of geometric series.
fn series_oracle(e: &PointSetE, m_max: usize) -> Vec<C64> {
    let mut out = vec![C64::from(1.0)];
    out.resize(m_max + 1, C64::from(0.0));
    for xi in e.points() {
        let w = xi.conj();
        // Multiplying by Σ w^k z^k is the running sum s_m = out_m + w·s_{m−1}.
        for m in 1..=m_max {
            let prev = out[m - 1];
            out[m] += w * prev;
        }
    }
    out
}

fn sample_sets() -> Vec<PointSetE> {
    vec![
        PointSetE::from_angles(&[0.0]).unwrap(),
        PointSetE::from_angles(&[0.0, 2.5]).unwrap(),
        PointSetE::from_angles(&[0.3, 1.9, 4.0]).unwrap(),
        PointSetE::roots_of_unity(5, 0.1).unwrap(),
    ]
}

#[test]
fn recursion_matches_geometric_series_product() {
    for e in sample_sets() {
        let a = a_coeffs_recursive(&e, 80);
        let oracle = series_oracle(&e, 80);
        for (m, (x, y)) in a.iter().zip(&oracle).enumerate() {
            assert!((x - y).norm() < 1e-11, "{e:?} m = {m}: {x} vs {y}");
        }
    }
}

#[test]
fn partial_fractions_agree_far_out() {
    for e in sample_sets() {
        let beta = beta_weights(&e).unwrap();
        let scale = beta.iter().map(|b| b.norm()).sum::<f64>().max(1.0);
        let a = a_coeffs_recursive(&e, 3000);
        for m in [0, 1, 7, 500, 1999, 3000] {
            let gap = (a[m] - a_from_beta(&beta, &e, m)).norm() / scale;
            assert!(gap < 1e-12, "m = {m}: relative gap {gap:e}");
        }
    }
}

#[test]
fn roots_of_unity_give_periodic_indicator() {
    // ∏(1 − ξ̄z) = 1 − z^N, so a_m is 1 on multiples of N and 0 elsewhere.
    for n in 1..=6 {
        let e = PointSetE::roots_of_unity(n, 0.0).unwrap();
        let cs = c_coeffs(&e);
        assert!((cs[0] - 1.0).norm() < 1e-15 && (cs[n] + 1.0).norm() < 1e-14);
        for (m, a) in a_coeffs_recursive(&e, 400).iter().enumerate() {
            let want = if m % n == 0 { 1.0 } else { 0.0 };
            assert!((a - want).norm() < 1e-13, "n = {n}, m = {m}: {a}");
        }
    }
}

#[test]
fn rotation_conjugates_coefficients() {
    let e = PointSetE::from_angles(&[0.2, 1.7, 3.9]).unwrap();
    let omega = c(0.6, 0.8);
    let a = a_coeffs_recursive(&e, 200);
    let b = a_coeffs_recursive(&e.rotated(omega), 200);
    for m in 0..=200 {
        let want = a[m] * omega.conj().powu(m as u32);
        assert!((b[m] - want).norm() < 1e-11, "m = {m}");
    }
}

#[test]
fn extension_reproduces_direct_computation() {
    let e = PointSetE::from_angles(&[0.0, 2.5]).unwrap();
    let mut coeffs = TaylorCoeffs::new(&e, 10).unwrap();
    coeffs.extend(700);
    assert_eq!(coeffs.m_max(), 700);
    let direct = a_coeffs_recursive(&e, 700);
    for (m, want) in direct.iter().enumerate() {
        assert_eq!(coeffs.a_at(m), *want);
    }
}
