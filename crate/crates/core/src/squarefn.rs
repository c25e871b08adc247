//! The square function `‖x‖_T = (Σ_k ‖T^kAx‖²)^{1/2}` with
//! `A = ∏_j(I − ξ̄_jT)^{1/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{random_unit_vector, stream_rng};
use crate::numerics::{identity, opnorm, principal_sqrt, vec_norm, CMatrix, CVector, C64};
use crate::polygonal::{check_sectorial, PointSetE};

/// Truncation cap for the adaptive sum.
pub const MAX_TERMS: usize = 100_000;
/// Consecutive negligible terms required before stopping.
const QUIET_RUN: usize = 16;

/// `∏_j(I − ξ̄_jT)`, factors in index order.
pub fn sectorial_product(t: &CMatrix, e: &PointSetE) -> CMatrix {
    let n = t.nrows();
    let mut p = identity(n);
    for xi in e.points() {
        p *= identity(n) - t * xi.conj();
    }
    p
}

/// `A = ∏_j principal_sqrt(I − ξ̄_jT)` in index order, after checking that
/// every factor is sectorial of angle below `π/2` and that `A²` reproduces
/// the product within `1e-8` (the factors commute, being functions of `T`).
pub fn sectorial_factor(t: &CMatrix, e: &PointSetE) -> Result<CMatrix> {
    let n = t.nrows();
    let mut a = identity(n);
    for &xi in e.points() {
        let s = check_sectorial(t, xi);
        if !s.sectorial {
            return Err(Error::NotSectorial(format!(
                "I − ξ̄T at ξ = {xi} has sector angle {:.6}",
                s.angle
            )));
        }
        a *= principal_sqrt(&(identity(n) - t * xi.conj()))?;
    }
    let prod = sectorial_product(t, e);
    let defect = opnorm(&(&a * &a - &prod));
    if defect > 1e-8 * (1.0 + opnorm(&prod)) {
        return Err(Error::NotSectorial(format!(
            "square-root factors fail to reproduce the product (defect {defect:.3e})"
        )));
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquareFunctionReport {
    pub value: f64,
    /// Terms `k = 0..=truncation` were summed.
    pub truncation: usize,
    /// Estimated `Σ_{k>K}‖T^kAx‖²` from the observed decay rate.
    pub tail_bound: f64,
    /// Observed per-step ratio of the squared terms at the end of the sum.
    pub decay_rate: f64,
    #[serde(with = "crate::numerics::json")]
    pub factor_a: CMatrix,
}

/// Adaptive square function for a precomputed factor `A`.
///
/// Stops once `‖T^kAx‖² ≤ tol·(running sum)/(k+1)` for 16 consecutive `k`.
pub fn square_function_with_factor(
    t: &CMatrix,
    a: &CMatrix,
    x: &CVector,
    tol: f64,
) -> Result<SquareFunctionReport> {
    let mut w = a * x;
    let mut sum = 0.0;
    let mut quiet = 0;
    let mut terms: Vec<f64> = Vec::new();
    let mut k = 0;
    loop {
        let term = vec_norm(&w).powi(2);
        sum += term;
        terms.push(term);
        if term <= tol * sum / (k as f64 + 1.0) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= QUIET_RUN {
            break;
        }
        if k >= MAX_TERMS {
            return Err(Error::NotConverged {
                what: "square function",
                achieved: term / sum.max(f64::MIN_POSITIVE),
                iterations: k,
            });
        }
        w = t * &w;
        k += 1;
    }
    let last = terms[k];
    let earlier = terms[k + 1 - QUIET_RUN];
    let rate = if earlier > 0.0 {
        (last / earlier).powf(1.0 / (QUIET_RUN - 1) as f64)
    } else {
        0.0
    };
    let tail_bound = if last == 0.0 {
        0.0
    } else if rate < 1.0 {
        last * rate / (1.0 - rate)
    } else {
        // No geometric decay visible yet: the stopping rule alone bounds each
        // further term by the last one.
        last * (k as f64 + 1.0)
    };
    Ok(SquareFunctionReport {
        value: sum.sqrt(),
        truncation: k,
        tail_bound,
        decay_rate: rate,
        factor_a: a.clone(),
    })
}

pub fn square_function(
    t: &CMatrix,
    e: &PointSetE,
    x: &CVector,
    tol: f64,
) -> Result<SquareFunctionReport> {
    let a = sectorial_factor(t, e)?;
    square_function_with_factor(t, &a, x, tol)
}

/// Empirical lower bound for the best `C` in `‖x‖_T ≤ C‖x‖`: the maximum of
/// the square function over `trials` unit vectors. The first trials are the
/// coordinate vectors; the rest are random, each drawn from its own stream
/// split from `seed`.
pub fn square_constant_estimate(
    t: &CMatrix,
    e: &PointSetE,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    let n = t.nrows();
    let a = sectorial_factor(t, e)?;
    let values: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = if i < n {
                let mut v = CVector::zeros(n);
                v[i] = C64::from(1.0);
                v
            } else {
                random_unit_vector(&mut stream_rng(seed, i as u64), n)
            };
            square_function_with_factor(t, &a, &x, tol).map(|r| r.value)
        })
        .collect();
    let mut best = 0.0f64;
    for v in values {
        best = best.max(v?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, real_diag, zeros, ONE, ZERO};

    fn e1() -> PointSetE {
        PointSetE::new(vec![ONE]).unwrap()
    }

    #[test]
    fn factor_examples() {
        let e = PointSetE::from_angles(&[0.0, 2.0]).unwrap();
        let a = sectorial_factor(&zeros(3), &e).unwrap();
        assert!(opnorm(&(a - identity(3))) < 1e-14);
        let a = sectorial_factor(&real_diag(&[0.5]), &e1()).unwrap();
        assert!((a[(0, 0)] - c(0.5f64.sqrt(), 0.0)).norm() < 1e-14);
        let a = sectorial_factor(&real_diag(&[1.0, 0.3]), &e1()).unwrap();
        assert!(opnorm(&(a - real_diag(&[0.0, 0.7f64.sqrt()]))) < 1e-12);
    }

    #[test]
    fn value_examples() {
        let x = CVector::from_vec(vec![ONE, ZERO]);
        let r = square_function(&real_diag(&[1.0, 0.3]), &e1(), &x, 1e-14).unwrap();
        assert!(r.value < 1e-12);

        for lambda in [0.0, 0.3, 0.8, 0.95] {
            let r = square_function(
                &real_diag(&[lambda]),
                &e1(),
                &CVector::from_vec(vec![ONE]),
                1e-14,
            )
            .unwrap();
            let want = 1.0 / (1.0 + lambda).sqrt();
            assert!((r.value - want).abs() < 1e-9, "λ={lambda}: {} vs {want}", r.value);
        }

        let x = CVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        let e = PointSetE::from_angles(&[0.5, 1.5]).unwrap();
        let r = square_function(&zeros(2), &e, &x, 1e-14).unwrap();
        assert!((r.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_examples() {
        let e = PointSetE::from_angles(&[0.5, 1.5]).unwrap();
        let v = square_constant_estimate(&zeros(3), &e, 8, 1, 1e-14).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = square_constant_estimate(&real_diag(&[0.2, 0.7]), &e1(), 6, 3, 1e-14).unwrap();
        assert!((v - 1.0 / 1.2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn homogeneity() {
        let t = real_diag(&[0.5, -0.25]);
        let x = CVector::from_vec(vec![c(1.0, 0.5), c(-0.2, 0.3)]);
        let s = c(-2.0, 1.5);
        let a = square_function(&t, &e1(), &x, 1e-14).unwrap().value;
        let b = square_function(&t, &e1(), &(&x * s), 1e-14).unwrap().value;
        assert!((b - s.norm() * a).abs() <= 1e-10 * b.max(1.0));
    }
}
