//! Taylor coefficients of `1/∏_j(1 − ξ̄_j z)`, their partial fractions and
//! the polynomials `S_k(z) = Σ_{m≤k} a_m z^m ∏_j(1 − ξ̄_j z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{vec_norm, CMatrix, CVector, C64, ONE, ZERO};
use crate::polygonal::PointSetE;

/// Minimum separation of `E` below which the partial-fraction weights are
/// considered unusable.
pub const BETA_SEPARATION: f64 = 1e-6;

/// `a_0…a_{m_max}`, `β_1…β_N` and `c_0…c_N` for a peripheral set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeffs {
    pub e: PointSetE,
    pub a: Vec<C64>,
    pub beta: Vec<C64>,
    pub c: Vec<C64>,
}

impl TaylorCoeffs {
    pub fn new(e: &PointSetE, m_max: usize) -> Result<Self> {
        Ok(Self {
            e: e.clone(),
            a: a_coeffs_recursive(e, m_max),
            beta: beta_weights(e)?,
            c: c_coeffs(e),
        })
    }

    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    pub fn m_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_m`, from storage when available and from the partial fractions
    /// beyond it.
    pub fn a_at(&self, m: usize) -> C64 {
        match self.a.get(m) {
            Some(v) => *v,
            None => a_from_beta(&self.beta, &self.e, m),
        }
    }

    /// Extends the stored coefficients to `m_max` by the recursion.
    pub fn extend(&mut self, m_max: usize) {
        if m_max > self.m_max() {
            self.a = a_coeffs_recursive(&self.e, m_max);
        }
    }

    /// `Σ_i |β_i|`, the bound on every `|a_m|`.
    pub fn beta_l1(&self) -> f64 {
        self.beta.iter().map(|b| b.norm()).sum()
    }

    pub fn sup_a(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `S_k(z)` evaluated at a scalar.
    pub fn sk_scalar(&self, k: usize, z: C64) -> C64 {
        let prod: C64 = self.e.points().iter().map(|xi| ONE - xi.conj() * z).product();
        let mut s = ZERO;
        let mut zm = ONE;
        for m in 0..=k {
            s += self.a_at(m) * zm;
            zm *= z;
        }
        s * prod
    }

    /// `γ_{r,k} = Σ_{m=r−N..k} c_{r−m} a_m` for `r = k+1..k+N`.
    pub fn gammas(&self, k: usize) -> Vec<C64> {
        let n = self.n();
        (k + 1..=k + n)
            .map(|r| {
                let mut g = ZERO;
                for m in r.saturating_sub(n)..=k {
                    g += self.c[r - m] * self.a_at(m);
                }
                g
            })
            .collect()
    }
}

/// Coefficients of `∏_j(1 − ξ̄_j z) = Σ_i c_i z^i`.
pub fn c_coeffs(e: &PointSetE) -> Vec<C64> {
    c_coeffs_dd(e).iter().map(|v| v.round()).collect()
}

fn c_coeffs_dd(e: &PointSetE) -> Vec<dd::Complex> {
    let mut c = vec![dd::Complex::from(ONE)];
    for xi in e.points() {
        let w = dd::Complex::from(-xi.conj());
        let mut next = vec![dd::Complex::default(); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] = next[i].add(*ci);
            next[i + 1] = next[i + 1].add(ci.mul(w));
        }
        c = next;
    }
    c
}

/// `a_0…a_{m_max}` from `a_0 = 1` and `Σ_{i≤min(r,N)} c_i a_{r−i} = 0`.
///
/// The recurrence has all its roots on the unit circle, so rounding errors
/// do not decay; it runs in double-double arithmetic and rounds once.
pub fn a_coeffs_recursive(e: &PointSetE, m_max: usize) -> Vec<C64> {
    let c = c_coeffs_dd(e);
    let n = c.len() - 1;
    let mut a = Vec::with_capacity(m_max + 1);
    a.push(dd::Complex::from(ONE));
    for r in 1..=m_max {
        let mut s = dd::Complex::default();
        for i in 1..=n.min(r) {
            s = s.add(c[i].mul(a[r - i]));
        }
        a.push(s.neg());
    }
    a.iter().map(|v| v.round()).collect()
}

/// Residues `β_i = 1/∏_{j≠i}(1 − ξ̄_j ξ_i)`.
pub fn beta_weights(e: &PointSetE) -> Result<Vec<C64>> {
    let sep = e.min_pairwise_distance();
    if sep < BETA_SEPARATION {
        return Err(Error::IllConditioned(sep));
    }
    let pts = e.points();
    Ok(pts
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let denom: C64 = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, xj)| ONE - xj.conj() * xi)
                .product();
            ONE / denom
        })
        .collect())
}

/// `Σ_i β_i ξ̄_i^m`.
pub fn a_from_beta(beta: &[C64], e: &PointSetE, m: usize) -> C64 {
    beta.iter()
        .zip(e.points())
        .map(|(b, xi)| b * xi.conj().powu(m as u32))
        .sum()
}

/// `y = ∏_j(I − ξ̄_j T)x`, factors applied in index order.
pub fn apply_product(t: &CMatrix, e: &PointSetE, x: &CVector) -> CVector {
    let mut y = x.clone();
    for xi in e.points() {
        y = &y - (t * &y) * xi.conj();
    }
    y
}

/// `S_k(T)x = Σ_{m≤k} a_m T^m ∏_j(I − ξ̄_jT)x`, with powers applied to vectors.
pub fn sk_apply(t: &CMatrix, coeffs: &TaylorCoeffs, k: usize, x: &CVector) -> CVector {
    let mut w = apply_product(t, &coeffs.e, x);
    let mut s = &w * coeffs.a_at(0);
    for m in 1..=k {
        w = t * &w;
        s += &w * coeffs.a_at(m);
    }
    s
}

/// `S_k(T)x = x + Σ_{r=k+1..k+N} γ_{r,k} T^r x`; requires `k ≥ N`.
pub fn sk_apply_gamma(t: &CMatrix, coeffs: &TaylorCoeffs, k: usize, x: &CVector) -> Result<CVector> {
    let n = coeffs.n();
    if k < n {
        return Err(Error::InvalidInput(format!("k = {k} must be at least N = {n}")));
    }
    let gammas = coeffs.gammas(k);
    let mut w = x.clone();
    for _ in 0..=k {
        w = t * &w;
    }
    let mut s = x.clone();
    for g in gammas {
        s += &w * g;
        w = t * &w;
    }
    Ok(s)
}

/// `‖S_k(T)x − x‖`.
pub fn lemma34_residual(t: &CMatrix, e: &PointSetE, x: &CVector, k: usize) -> Result<f64> {
    let coeffs = TaylorCoeffs::new(e, k)?;
    Ok(vec_norm(&(sk_apply(t, &coeffs, k, x) - x)))
}

/// Residuals `‖S_k(T)x − x‖` for `k = 0, 1, …` until one drops below `tol`
/// (with `k ≥ N`), computed incrementally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualTrace {
    pub k: usize,
    pub residuals: Vec<f64>,
}

impl ResidualTrace {
    /// Whether block maxima over `blocks` equal windows never increase by
    /// more than `slack` (relative). Small-k oscillations are allowed.
    pub fn trends_down(&self, blocks: usize, slack: f64) -> bool {
        let len = self.residuals.len();
        if len < 2 * blocks || blocks == 0 {
            return self.residuals.last() <= self.residuals.first();
        }
        let size = len / blocks;
        let maxima: Vec<f64> = (0..blocks)
            .map(|b| {
                self.residuals[b * size..((b + 1) * size).min(len)]
                    .iter()
                    .copied()
                    .fold(0.0, f64::max)
            })
            .collect();
        maxima.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }
}

pub fn lemma34_adaptive(
    t: &CMatrix,
    coeffs: &mut TaylorCoeffs,
    x: &CVector,
    tol: f64,
    k_cap: usize,
) -> Result<ResidualTrace> {
    let n = coeffs.n();
    let scale = vec_norm(x).max(f64::MIN_POSITIVE);
    let mut w = apply_product(t, &coeffs.e, x);
    let mut s = w.clone();
    let mut residuals = vec![vec_norm(&(&s - x))];
    let mut k = 0;
    while !(k >= n && residuals[k] <= tol * scale) {
        if k >= k_cap {
            return Err(Error::NotConverged {
                what: "S_k(T)x",
                achieved: residuals[k] / scale,
                iterations: k,
            });
        }
        k += 1;
        if k >= coeffs.a.len() {
            coeffs.extend(2 * k);
        }
        w = t * &w;
        s += &w * coeffs.a[k];
        residuals.push(vec_norm(&(&s - x)));
    }
    Ok(ResidualTrace { k, residuals })
}

/// Double-double arithmetic (`hi + lo` with `|lo| ≤ ulp(hi)/2`), just the
/// operations the coefficient recursion needs.
mod dd {
    use crate::numerics::C64;

    #[derive(Debug, Clone, Copy, Default)]
    pub struct Real {
        hi: f64,
        lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn fast_two_sum(a: f64, b: f64) -> Real {
        let s = a + b;
        Real { hi: s, lo: b - (s - a) }
    }

    impl Real {
        pub fn from(x: f64) -> Self {
            Self { hi: x, lo: 0.0 }
        }

        pub fn add(self, o: Self) -> Self {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let r = fast_two_sum(s, e + t);
            fast_two_sum(r.hi, r.lo + f)
        }

        pub fn neg(self) -> Self {
            Self { hi: -self.hi, lo: -self.lo }
        }

        pub fn mul(self, o: Self) -> Self {
            let p = self.hi * o.hi;
            let e = self.hi.mul_add(o.hi, -p);
            fast_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
        }

        pub fn round(self) -> f64 {
            self.hi + self.lo
        }
    }

    #[derive(Debug, Clone, Copy, Default)]
    pub struct Complex {
        re: Real,
        im: Real,
    }

    impl Complex {
        pub fn from(z: C64) -> Self {
            Self {
                re: Real::from(z.re),
                im: Real::from(z.im),
            }
        }

        pub fn add(self, o: Self) -> Self {
            Self {
                re: self.re.add(o.re),
                im: self.im.add(o.im),
            }
        }

        pub fn neg(self) -> Self {
            Self {
                re: self.re.neg(),
                im: self.im.neg(),
            }
        }

        pub fn mul(self, o: Self) -> Self {
            Self {
                re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
                im: self.re.mul(o.im).add(self.im.mul(o.re)),
            }
        }

        pub fn round(self) -> C64 {
            C64::new(self.re.round(), self.im.round())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, identity, real_diag, zeros};
    use std::f64::consts::PI;

    fn set(angles: &[f64]) -> PointSetE {
        PointSetE::from_angles(angles).unwrap()
    }

    #[test]
    fn c_examples() {
        assert_eq!(c_coeffs(&set(&[0.0])), vec![ONE, -ONE]);
        let c2 = c_coeffs(&set(&[0.0, PI]));
        assert!((c2[0] - ONE).norm() < 1e-15 && c2[1].norm() < 1e-15);
        assert!((c2[2] + ONE).norm() < 1e-15);
        let ci = c_coeffs(&PointSetE::new(vec![c(0.0, 1.0)]).unwrap());
        assert_eq!(ci, vec![ONE, c(0.0, 1.0)]);
    }

    #[test]
    fn a_examples() {
        assert_eq!(a_coeffs_recursive(&set(&[0.0]), 5), vec![ONE; 6]);
        let a = a_coeffs_recursive(&set(&[0.0, PI]), 5);
        for (m, v) in a.iter().enumerate() {
            let want = if m % 2 == 0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-15);
        }
        let a = a_coeffs_recursive(&PointSetE::new(vec![c(0.0, 1.0)]).unwrap(), 3);
        let want = [ONE, c(0.0, -1.0), -ONE, c(0.0, 1.0)];
        for (v, w) in a.iter().zip(want) {
            assert!((v - w).norm() < 1e-15);
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_weights(&set(&[0.0])).unwrap(), vec![ONE]);
        let b = beta_weights(&set(&[0.0, PI])).unwrap();
        assert!((b[0] - 0.5).norm() < 1e-15 && (b[1] - 0.5).norm() < 1e-15);
        let b = beta_weights(&set(&[0.0, PI / 2.0])).unwrap();
        assert!((b.iter().sum::<C64>() - ONE).norm() < 1e-14);
        assert!(matches!(
            beta_weights(&set(&[0.0, 1e-7])),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn gamma_form_matches_product_form() {
        let e = set(&[0.3, 2.0, 4.1]);
        let coeffs = TaylorCoeffs::new(&e, 60).unwrap();
        let t = crate::numerics::from_rows(&[
            vec![c(0.4, 0.1), c(0.2, 0.0), ZERO],
            vec![ZERO, c(-0.3, 0.2), c(0.1, -0.1)],
            vec![c(0.05, 0.0), ZERO, c(0.1, 0.5)],
        ]);
        let x = CVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.25), c(0.0, 2.0)]);
        for k in [3, 10, 40] {
            let p = sk_apply(&t, &coeffs, k, &x);
            let g = sk_apply_gamma(&t, &coeffs, k, &x).unwrap();
            assert!(vec_norm(&(p - g)) <= 1e-10 * vec_norm(&x));
        }
    }

    #[test]
    fn sk_examples() {
        let e = set(&[0.0, 1.5]);
        let coeffs = TaylorCoeffs::new(&e, 30).unwrap();
        let x = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        assert_eq!(sk_apply(&zeros(2), &coeffs, 5, &x), x);

        let xi = e.points()[0];
        let t = identity(2) * xi;
        let got = sk_apply(&t, &coeffs, 7, &x);
        let want = &x * coeffs.sk_scalar(7, xi);
        assert!(vec_norm(&(got - want)) < 1e-12);

        let e1 = set(&[0.0]);
        for k in [5, 40] {
            let r = lemma34_residual(&real_diag(&[0.5]), &e1, &CVector::from_vec(vec![ONE]), k).unwrap();
            assert!((r - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        assert!(
            lemma34_residual(&real_diag(&[0.5]), &e1, &CVector::from_vec(vec![ONE]), 40).unwrap()
                <= 1e-10
        );
        assert_eq!(
            lemma34_residual(&real_diag(&[0.5]), &e1, &CVector::from_vec(vec![ZERO]), 10).unwrap(),
            0.0
        );
    }

    #[test]
    fn adaptive_trace_reaches_tolerance() {
        let e = set(&[0.0]);
        let mut coeffs = TaylorCoeffs::new(&e, 4).unwrap();
        let t = real_diag(&[0.9, 0.2]);
        let x = CVector::from_vec(vec![ONE, ONE]);
        let trace = lemma34_adaptive(&t, &mut coeffs, &x, 1e-9, 10_000).unwrap();
        assert!(*trace.residuals.last().unwrap() <= 1e-9 * 2f64.sqrt());
        assert!(trace.trends_down(4, 0.0));
    }
}
