//! Mean ergodic splitting `H = ⊕_j Ker(I − ξ̄_jT) ⊕ Ran ∏_j(I − ξ̄_jT)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{identity, null_space, opnorm, spectrum, zeros, CMatrix, CVector, C64};
use crate::polygonal::PointSetE;

/// Default horizon and cap of the power-boundedness gate.
pub const POWER_HORIZON: usize = 2048;
pub const POWER_CAP: f64 = 100.0;

/// Cesàro averages are doubled until successive ones differ by less than
/// this, then polished to an exact idempotent.
const CESARO_SWITCH: f64 = 0.05;
const CESARO_MIN_LENGTH: usize = 64;

/// `sup_{n ≤ horizon} ‖T^n‖` with the power attaining it.
///
/// Frobenius norms bound the operator norm from above, so the SVD is only
/// taken when the cheap bound exceeds `cap`; values below `cap` are those
/// upper bounds.
pub fn power_sup(t: &CMatrix, horizon: usize, cap: f64) -> (f64, usize) {
    let n = t.nrows();
    let mut p = identity(n);
    let mut best = (1.0, 0);
    for k in 1..=horizon {
        p = &p * t;
        let f = p.norm();
        let v = if f > cap { opnorm(&p) } else { f };
        if v > best.0 {
            best = (v, k);
        }
        if v > cap || f < 1e-300 {
            break;
        }
    }
    best
}

/// Fails with `NotPowerBounded` when some `‖T^n‖`, `n ≤ horizon`, exceeds `cap`.
pub fn check_power_bounded(t: &CMatrix, horizon: usize, cap: f64) -> Result<f64> {
    let (v, k) = power_sup(t, horizon, cap);
    if v > cap {
        return Err(Error::NotPowerBounded { power: k, norm: v });
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroInfo {
    pub xi: C64,
    /// Averaging length reached before polishing.
    pub length: usize,
    /// `‖A_{2L} − A_L‖` at the last doubling.
    pub average_gap: f64,
    /// `‖P² − P‖` of the returned projection.
    pub idempotence: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CesaroProjection {
    pub projection: CMatrix,
    pub info: CesaroInfo,
}

/// `lim_n (1/(n+1))Σ_{k≤n}(ξ̄T)^k`.
///
/// Averages `A_L` are doubled (`S_{2L} = S_L + B^L S_L`) until
/// `‖A_{2L} − A_L‖` is small, with `L ≤ n_max`. The remaining `O(1/L)` error
/// is removed by iterating `P ← 3P² − 2P³`, which fixes the spectral
/// projection and converges quadratically from any average that is close to
/// it; plain averaging alone cannot reach tolerances near machine precision.
pub fn cesaro_projection(t: &CMatrix, xi: C64, n_max: usize, tol: f64) -> Result<CesaroProjection> {
    check_power_bounded(t, POWER_HORIZON.min(n_max.max(1)), POWER_CAP)?;
    let n = t.nrows();
    let b = t * xi.conj();
    let mut sum = identity(n);
    let mut power = b.clone();
    let mut length = 1usize;
    let mut avg = sum.clone();
    let mut gap = f64::INFINITY;
    while 2 * length <= n_max.max(1) {
        sum = &sum + &power * &sum;
        power = &power * &power;
        length *= 2;
        let next = &sum / C64::from(length as f64);
        gap = opnorm(&(&next - &avg));
        avg = next;
        if length >= CESARO_MIN_LENGTH && gap <= CESARO_SWITCH {
            break;
        }
    }
    let mut p = avg;
    let mut idem = f64::INFINITY;
    for _ in 0..100 {
        let p2 = &p * &p;
        idem = opnorm(&(&p2 - &p));
        if idem <= tol * 1e-2 || !idem.is_finite() {
            break;
        }
        p = &p2 * C64::from(3.0) - &p2 * &p * C64::from(2.0);
    }
    let idem = opnorm(&(&p * &p - &p)).min(idem);
    // Polishing can only settle on a spectral projection of B; BP = P picks
    // out the one at 1.
    let converged = idem <= tol && opnorm(&(&b * &p - &p)) <= 1e-6 * (1.0 + opnorm(&p));
    let info = CesaroInfo {
        xi,
        length,
        average_gap: gap,
        idempotence: idem,
        converged,
    };
    if !converged {
        return Err(Error::NotConverged {
            what: "Cesàro projection",
            achieved: idem,
            iterations: length,
        });
    }
    Ok(CesaroProjection {
        projection: p,
        info,
    })
}

/// Multiplicity cluster radius when counting eigenvalues at `ξ`.
const CLUSTER_TOL: f64 = 1e-6;

/// Riesz projection at a semisimple eigenvalue `ξ`: `V(W*V)^{-1}W*` from
/// right and left kernels of `T − ξI` (zero when `ξ ∉ σ(T)`).
pub fn eigen_projection(t: &CMatrix, xi: C64) -> Result<CMatrix> {
    let n = t.nrows();
    let scale = opnorm(t).max(1.0);
    let algebraic = spectrum(t)
        .iter()
        .filter(|l| (*l - xi).norm() <= CLUSTER_TOL * scale)
        .count();
    if algebraic == 0 {
        return Ok(zeros(n));
    }
    let shifted = t - identity(n) * xi;
    let v = null_space(&shifted, 1e-8 * scale);
    if v.ncols() < algebraic {
        return Err(Error::NotSemisimple(format!(
            "eigenvalue {xi} has algebraic multiplicity {algebraic} but only {} eigenvectors",
            v.ncols()
        )));
    }
    let w = null_space(&shifted.adjoint(), 1e-8 * scale);
    if w.ncols() != v.ncols() {
        return Err(Error::NotSemisimple(format!(
            "left and right kernels at {xi} differ in dimension"
        )));
    }
    let gram = w.adjoint() * &v;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::NotSemisimple(format!("singular biorthogonal pairing at {xi}")))?;
    Ok(&v * inv * w.adjoint())
}

/// Orthonormal (Frobenius) basis of `{X : TX = XT}` from the kernel of
/// `I ⊗ T − Tᵀ ⊗ I` acting on column-major `vec(X)`.
pub fn commutant_basis(t: &CMatrix) -> Vec<CMatrix> {
    let n = t.nrows();
    let id = identity(n);
    let m = id.kronecker(t) - t.transpose().kronecker(&id);
    let k = null_space(&m, 1e-10 * opnorm(t).max(f64::MIN_POSITIVE));
    (0..k.ncols())
        .map(|col| CMatrix::from_fn(n, n, |i, j| k[(j * n + i, col)]))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicDecomposition {
    pub e: PointSetE,
    /// `P_j` onto `Ker(I − ξ̄_jT)`, index order of `E`.
    #[serde(with = "crate::numerics::json::vec")]
    pub projections: Vec<CMatrix>,
    /// `P_{N+1} = I − Σ_j P_j` onto the range component.
    #[serde(with = "crate::numerics::json")]
    pub range_projection: CMatrix,
    #[serde(with = "crate::numerics::json::vec")]
    pub commutant_basis: Vec<CMatrix>,
    pub convergence: Vec<CesaroInfo>,
}

impl ErgodicDecomposition {
    /// Largest defect among `P_i² = P_i`, `P_iP_j = 0` and `ΣP = I`.
    pub fn algebra_defect(&self) -> f64 {
        let all: Vec<&CMatrix> = self
            .projections
            .iter()
            .chain(std::iter::once(&self.range_projection))
            .collect();
        let n = self.range_projection.nrows();
        let mut worst = 0.0f64;
        let mut total = zeros(n);
        for (i, p) in all.iter().enumerate() {
            total += *p;
            worst = worst.max(opnorm(&(*p * *p - *p)));
            for (j, q) in all.iter().enumerate() {
                if i != j {
                    worst = worst.max(opnorm(&(*p * *q)));
                }
            }
        }
        worst.max(opnorm(&(total - identity(n))))
    }

    /// Largest `‖PX − XP‖` over projections `P` and commutant basis `X`.
    pub fn bicommutant_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in self.projections.iter().chain(std::iter::once(&self.range_projection)) {
            for x in &self.commutant_basis {
                worst = worst.max(opnorm(&(p * x - x * p)));
            }
        }
        worst
    }
}

/// Cesàro projections for every `ξ_j ∈ E` plus the range projection and the
/// commutant basis.
pub fn full_decomposition(
    t: &CMatrix,
    e: &PointSetE,
    n_max: usize,
    tol: f64,
) -> Result<ErgodicDecomposition> {
    let n = t.nrows();
    let mut projections = Vec::with_capacity(e.len());
    let mut convergence = Vec::with_capacity(e.len());
    for &xi in e.points() {
        let cp = cesaro_projection(t, xi, n_max, tol)?;
        projections.push(cp.projection);
        convergence.push(cp.info);
    }
    let mut range = identity(n);
    for p in &projections {
        range -= p;
    }
    Ok(ErgodicDecomposition {
        e: e.clone(),
        projections,
        range_projection: range,
        commutant_basis: commutant_basis(t),
        convergence,
    })
}

/// `(P_1x, …, P_Nx, P_{N+1}x)`.
pub fn decompose_vector(dec: &ErgodicDecomposition, x: &CVector) -> Vec<CVector> {
    dec.projections
        .iter()
        .chain(std::iter::once(&dec.range_projection))
        .map(|p| p * x)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, from_rows, real_diag, vec_norm, ONE, ZERO};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = opnorm(&(a - b));
        assert!(d <= tol, "difference {d:.3e}\n{a}\n{b}");
    }

    #[test]
    fn cesaro_examples() {
        let xi = C64::from_polar(1.0, 0.7);
        let p = cesaro_projection(&(identity(3) * xi), xi, 4096, 1e-10).unwrap();
        close(&p.projection, &identity(3), 1e-12);

        let p = cesaro_projection(&real_diag(&[1.0, 0.5]), ONE, 4096, 1e-10).unwrap();
        close(&p.projection, &real_diag(&[1.0, 0.0]), 1e-12);

        let t = from_rows(&[vec![ONE, ONE], vec![ZERO, c(0.5, 0.0)]]);
        let p = cesaro_projection(&t, ONE, 4096, 1e-10).unwrap();
        let want = from_rows(&[vec![ONE, c(2.0, 0.0)], vec![ZERO, ZERO]]);
        close(&p.projection, &want, 1e-10);
    }

    #[test]
    fn cesaro_rejects_jordan_block() {
        let t = from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        assert!(matches!(
            cesaro_projection(&t, ONE, 4096, 1e-10),
            Err(Error::NotPowerBounded { .. })
        ));
    }

    #[test]
    fn eigen_projection_examples() {
        close(
            &eigen_projection(&real_diag(&[0.5, 0.2]), ONE).unwrap(),
            &zeros(2),
            0.0,
        );
        close(
            &eigen_projection(&real_diag(&[1.0, 0.5]), ONE).unwrap(),
            &real_diag(&[1.0, 0.0]),
            1e-14,
        );
        let t = from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        assert!(matches!(eigen_projection(&t, ONE), Err(Error::NotSemisimple(_))));
        let t = from_rows(&[vec![ONE, ONE], vec![ZERO, c(0.5, 0.0)]]);
        let riesz = eigen_projection(&t, ONE).unwrap();
        let ces = cesaro_projection(&t, ONE, 4096, 1e-10).unwrap().projection;
        close(&riesz, &ces, 1e-8);
    }

    #[test]
    fn decomposition_examples() {
        let e1 = PointSetE::new(vec![ONE]).unwrap();
        let dec = full_decomposition(&(identity(2) * c(0.5, 0.0)), &e1, 4096, 1e-10).unwrap();
        close(&dec.projections[0], &zeros(2), 1e-12);
        close(&dec.range_projection, &identity(2), 1e-12);

        let e2 = PointSetE::new(vec![ONE, -ONE]).unwrap();
        let dec = full_decomposition(&real_diag(&[1.0, -1.0, 0.3]), &e2, 4096, 1e-10).unwrap();
        close(&dec.projections[0], &real_diag(&[1.0, 0.0, 0.0]), 1e-12);
        close(&dec.projections[1], &real_diag(&[0.0, 1.0, 0.0]), 1e-12);
        close(&dec.range_projection, &real_diag(&[0.0, 0.0, 1.0]), 1e-12);
        assert!(dec.algebra_defect() <= 1e-10);
        assert!(dec.bicommutant_defect() <= 1e-9);

        let x = CVector::from_vec(vec![c(2.0, 0.0), ZERO, ZERO]);
        let parts = decompose_vector(&dec, &x);
        assert!(vec_norm(&(&parts[0] - &x)) <= 1e-10);
        assert!(vec_norm(&parts[1]) <= 1e-10 && vec_norm(&parts[2]) <= 1e-10);
    }

    #[test]
    fn commutant_of_distinct_diagonal_is_diagonal() {
        let basis = commutant_basis(&real_diag(&[1.0, 2.0, 3.0]));
        assert_eq!(basis.len(), 3);
        for x in &basis {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert!(x[(i, j)].norm() < 1e-12);
                    }
                }
            }
        }
        assert_eq!(commutant_basis(&identity(2)).len(), 4);
    }
}
