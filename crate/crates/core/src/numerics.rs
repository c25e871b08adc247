//! Dense complex matrix kernels used by every other module: operator norm,
//! complex Schur form, spectrum, resolvents, principal square roots and
//! Kronecker products.
//!
//! All routines are pure functions of their inputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default cap on the dimension of a Kronecker product.
pub const DEFAULT_KRON_CAP: usize = 4096;

/// Relative tolerances for the numerical kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `z` counts as a spectral point when its distance to the spectrum is
    /// below `resolvent_gap * max(‖A‖, 1)`.
    pub resolvent_gap: f64,
    /// Largest accepted residual `‖(zI − A)X − I‖` of a computed resolvent.
    pub resolvent_residual: f64,
    /// Singular values below `rank * ‖A‖` count as zero.
    pub rank: f64,
    /// Cap on the dimension of Kronecker products.
    pub kron_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            resolvent_gap: 1e-13,
            resolvent_residual: 1e-10,
            rank: 1e-10,
            kron_cap: DEFAULT_KRON_CAP,
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

pub fn real_diag(entries: &[f64]) -> CMatrix {
    let v: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
    diag(&v)
}

/// Builds a matrix from row slices.
pub fn from_rows(rows: &[Vec<C64>]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in decreasing order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Operator norm (largest singular value).
pub fn opnorm(a: &CMatrix) -> f64 {
    if a.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn vec_norm(x: &CVector) -> f64 {
    x.norm()
}

/// Number of singular values above `rel_tol * ‖A‖`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Orthonormal basis (as columns) of the numerical null space of `a`.
///
/// The threshold is `abs_tol` on singular values.
pub fn null_space(a: &CMatrix, abs_tol: f64) -> CMatrix {
    let n = a.ncols();
    // Work with the square Gram-free route: SVD of a (padded to at least n rows).
    let padded = if a.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^*");
    let mut cols = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= abs_tol {
            let row = v_t.row(k);
            cols.push(CVector::from_iterator(n, row.iter().map(|z| z.conj())));
        }
    }
    if cols.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    CMatrix::from_columns(&cols)
}

/// Complex Schur form `A = Q·T·Q*` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Reassembles `Q·X·Q*` for a matrix expressed in the Schur basis.
    pub fn back(&self, x: &CMatrix) -> CMatrix {
        &self.q * x * self.q.adjoint()
    }
}

fn householder_vector(x: &[C64]) -> Option<(Vec<C64>, C64)> {
    // Returns (v, beta) with (I - beta v v*) x = alpha e_1.
    let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
    let alpha = -phase * norm;
    let mut v: Vec<C64> = x.to_vec();
    v[0] -= alpha;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if vnorm2 == 0.0 {
        return None;
    }
    Some((v, c(2.0 / vnorm2, 0.0)))
}

fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let Some((v, beta)) = householder_vector(&x) else {
            continue;
        };
        // H <- P H P with P = I - beta v v* acting on rows/cols k+1..n.
        for j in 0..n {
            let mut s = ZERO;
            for (idx, i) in (k + 1..n).enumerate() {
                s += v[idx].conj() * h[(i, j)];
            }
            s *= beta;
            for (idx, i) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[idx] * s;
            }
        }
        for i in 0..n {
            let mut s = ZERO;
            for (idx, j) in (k + 1..n).enumerate() {
                s += h[(i, j)] * v[idx];
            }
            s *= beta;
            for (idx, j) in (k + 1..n).enumerate() {
                h[(i, j)] -= s * v[idx].conj();
            }
        }
        for i in 0..n {
            let mut s = ZERO;
            for (idx, j) in (k + 1..n).enumerate() {
                s += q[(i, j)] * v[idx];
            }
            s *= beta;
            for (idx, j) in (k + 1..n).enumerate() {
                q[(i, j)] -= s * v[idx].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Givens rotation `G` with `G* [a; b] = [r; 0]`, returned as (c, s) where
/// `G = [[c, -conj(s)], [s, c]]` and `c` is real.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b / nb);
    }
    let r = na.hypot(nb);
    let cs = na / r;
    let sn = (a / na) * b.conj() / r;
    (cs, sn.conj())
}

fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    // Eigenvalue of [[a, b], [c, d]] closest to d.
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * cc;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition by Hessenberg reduction followed by the
/// single-shift QR iteration with Wilkinson shifts and deflation.
pub fn schur(a: &CMatrix) -> SchurForm {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "schur requires a square matrix");
    if n == 0 {
        return SchurForm {
            q: CMatrix::zeros(0, 0),
            t: CMatrix::zeros(0, 0),
        };
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return SchurForm {
            q: identity(n),
            t: a.clone(),
        };
    }
    let (mut h, mut q) = hessenberg(&(a / c(scale, 0.0)));
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total_iter = 0usize;
    while hi > 0 {
        // Find the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= eps * local.max(eps) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        iter_since_deflation += 1;
        total_iter += 1;
        if total_iter > 100 * n.max(10) {
            // Give up on further deflation; remaining subdiagonal entries are
            // left in place. This has not been observed for finite input.
            break;
        }
        let shift = if iter_since_deflation % 11 == 10 {
            // Exceptional shift.
            h[(hi, hi)] + c(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        // Implicit single-shift QR sweep on rows/cols lo..=hi via bulge chasing.
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (cs, sn) = givens(x, y);
            // Apply G* to rows k, k+1 (columns from max(lo, k-1) .. n).
            let col_start = if k > lo { k - 1 } else { lo };
            for j in col_start..n {
                let hk = h[(k, j)];
                let hk1 = h[(k + 1, j)];
                h[(k, j)] = hk * cs + hk1 * sn.conj();
                h[(k + 1, j)] = -hk * sn + hk1 * cs;
            }
            // Apply G to columns k, k+1 (rows 0 .. min(k+2, hi)).
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let hk = h[(i, k)];
                let hk1 = h[(i, k + 1)];
                h[(i, k)] = hk * cs + hk1 * sn;
                h[(i, k + 1)] = -hk * sn.conj() + hk1 * cs;
            }
            for i in 0..n {
                let qk = q[(i, k)];
                let qk1 = q[(i, k + 1)];
                q[(i, k)] = qk * cs + qk1 * sn;
                q[(i, k + 1)] = -qk * sn.conj() + qk1 * cs;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    SchurForm {
        q,
        t: h * c(scale, 0.0),
    }
}

/// Eigenvalues with algebraic multiplicity (diagonal of the Schur form).
pub fn spectrum(a: &CMatrix) -> Vec<C64> {
    schur(a).eigenvalues()
}

pub fn spectral_radius(a: &CMatrix) -> f64 {
    spectrum(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Inverse of an upper triangular matrix by back substitution.
pub fn upper_triangular_inverse(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = ONE / t[(j, j)];
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in i + 1..=j {
                s += t[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = -s / t[(i, i)];
        }
    }
    x
}

/// Resolvent evaluator caching the Schur form of `A`, so that many points `z`
/// can be probed at the cost of one triangular solve each.
#[derive(Debug, Clone)]
pub struct Resolvent {
    schur: SchurForm,
    norm: f64,
    tol: Tolerances,
}

impl Resolvent {
    pub fn new(a: &CMatrix) -> Self {
        Self::with_tolerances(a, Tolerances::default())
    }

    pub fn with_tolerances(a: &CMatrix, tol: Tolerances) -> Self {
        Self {
            schur: schur(a),
            norm: opnorm(a),
            tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.schur.t.nrows()
    }

    pub fn spectrum(&self) -> Vec<C64> {
        self.schur.eigenvalues()
    }

    pub fn schur(&self) -> &SchurForm {
        &self.schur
    }

    pub fn operator_norm(&self) -> f64 {
        self.norm
    }

    /// Distance from `z` to the spectrum.
    pub fn distance_to_spectrum(&self, z: C64) -> f64 {
        self.spectrum()
            .iter()
            .map(|l| (z - l).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn check(&self, z: C64) -> Result<()> {
        let d = self.distance_to_spectrum(z);
        if d <= self.tol.resolvent_gap * self.norm.max(1.0) {
            return Err(Error::SingularResolvent {
                z: format!("{z}"),
                distance: d,
            });
        }
        Ok(())
    }

    /// `(zI − T)^{-1}` in the Schur basis (upper triangular).
    pub fn triangular_at(&self, z: C64) -> Result<CMatrix> {
        self.check(z)?;
        let n = self.dim();
        let shifted = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                z - self.schur.t[(i, j)]
            } else {
                -self.schur.t[(i, j)]
            }
        });
        Ok(upper_triangular_inverse(&shifted))
    }

    /// `R(z, A) = (zI − A)^{-1}`.
    pub fn at(&self, z: C64) -> Result<CMatrix> {
        let tri = self.triangular_at(z)?;
        Ok(self.schur.back(&tri))
    }

    /// `‖R(z, A)‖` computed as `1/σ_min(zI − T)`.
    pub fn norm_at(&self, z: C64) -> Result<f64> {
        self.check(z)?;
        let n = self.dim();
        let shifted = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                z - self.schur.t[(i, j)]
            } else {
                -self.schur.t[(i, j)]
            }
        });
        let s = singular_values(&shifted);
        let smin = s.last().copied().unwrap_or(0.0);
        if smin == 0.0 {
            return Err(Error::SingularResolvent {
                z: format!("{z}"),
                distance: 0.0,
            });
        }
        Ok(1.0 / smin)
    }
}

/// `(zI − A)^{-1}`, with the residual `‖(zI−A)X − I‖` checked.
pub fn resolvent(z: C64, a: &CMatrix) -> Result<CMatrix> {
    let tol = Tolerances::default();
    let r = Resolvent::with_tolerances(a, tol);
    let x = r.at(z)?;
    let n = a.nrows();
    let shifted = identity(n) * z - a;
    let residual = opnorm(&(&shifted * &x - identity(n)));
    if residual > tol.resolvent_residual {
        return Err(Error::SingularResolvent {
            z: format!("{z}"),
            distance: r.distance_to_spectrum(z),
        });
    }
    Ok(x)
}

/// Principal square root of an upper triangular matrix whose diagonal avoids
/// the closed negative real axis (Björck–Hammarling recurrence).
fn triangular_sqrt(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in i + 1..j {
                s += r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = (t[(i, j)] - s) / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Spectral projection onto the kernel of `a` along its range, assuming the
/// zero eigenvalue is semisimple. `kernel` holds a basis of `Ker a`.
pub(crate) fn kernel_projection(a: &CMatrix, kernel: &CMatrix, abs_tol: f64) -> Option<CMatrix> {
    let k = kernel.ncols();
    if k == 0 {
        return Some(CMatrix::zeros(a.nrows(), a.nrows()));
    }
    let left = null_space(&a.adjoint(), abs_tol);
    if left.ncols() != k {
        return None;
    }
    let gram = left.adjoint() * kernel;
    let inv = gram.try_inverse()?;
    Some(kernel * inv * left.adjoint())
}

/// Principal square root: `X² = A` with spectrum of `X` in the closed right
/// half-plane.
///
/// Eigenvalues on the open negative real axis are rejected, and a zero
/// eigenvalue must be semisimple (`rank A == rank A²`). The zero part is
/// split off with its spectral projection `P₀`, using
/// `√A = √(A + P₀) − P₀`.
pub fn principal_sqrt(a: &CMatrix) -> Result<CMatrix> {
    principal_sqrt_with(a, Tolerances::default())
}

pub fn principal_sqrt_with(a: &CMatrix, tol: Tolerances) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidInput("principal_sqrt needs a square matrix".into()));
    }
    let norm = opnorm(a);
    if norm == 0.0 {
        return Ok(zeros(n));
    }
    let rank_a = numerical_rank(a, tol.rank);
    let a2 = a * a;
    let rank_a2 = if rank_a == n {
        n
    } else {
        // Threshold relative to ‖A‖² keeps the test scale-consistent.
        let s = singular_values(&a2);
        s.iter().filter(|&&x| x > tol.rank * norm * norm).count()
    };
    if rank_a != rank_a2 {
        return Err(Error::NotSectorial(format!(
            "zero eigenvalue is not semisimple (rank A = {rank_a}, rank A² = {rank_a2})"
        )));
    }
    let abs_tol = tol.rank * norm;
    let mut shifted = a.clone();
    let mut p0 = None;
    if rank_a < n {
        let kernel = null_space(a, abs_tol);
        let p = kernel_projection(a, &kernel, abs_tol).ok_or_else(|| {
            Error::NotSectorial("kernel projection of the zero eigenvalue is singular".into())
        })?;
        shifted += &p;
        p0 = Some(p);
    }
    let sf = schur(&shifted);
    let axis_tol = 1e-12 * (1.0 + norm);
    for lambda in sf.eigenvalues() {
        if lambda.re < -axis_tol && lambda.im.abs() <= axis_tol {
            return Err(Error::NotSectorial(format!(
                "eigenvalue {lambda} lies on the negative real axis"
            )));
        }
        if lambda.norm() <= abs_tol {
            return Err(Error::NotSectorial(format!(
                "eigenvalue {lambda} at zero survived the kernel split"
            )));
        }
    }
    let root = sf.back(&triangular_sqrt(&sf.t));
    Ok(match p0 {
        Some(p) => root - p,
        None => root,
    })
}

/// Positive square root of a Hermitian positive semidefinite matrix, with
/// eigenvalues below zero (rounding) clipped.
pub fn hermitian_psd_sqrt(h: &CMatrix) -> CMatrix {
    let herm = (h + h.adjoint()) * C64::from(0.5);
    let eig = herm.symmetric_eigen();
    let roots: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::from(l.max(0.0).sqrt()))
        .collect();
    &eig.eigenvectors * diag(&roots) * eig.eigenvectors.adjoint()
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn hermitian_min_eigenvalue(h: &CMatrix) -> f64 {
    let herm = (h + h.adjoint()) * C64::from(0.5);
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Kronecker product `A ⊗ B` (row index of `A` major).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product refusing results larger than `cap` in either dimension.
pub fn kron_capped(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    let dim = rows.max(cols);
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    Ok(kron(a, b))
}

/// `x ↦ A^k x` for k = 0..=k_max, without forming matrix powers.
pub fn power_orbit(a: &CMatrix, x: &CVector, k_max: usize) -> Vec<CVector> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut v = x.clone();
    out.push(v.clone());
    for _ in 0..k_max {
        v = a * v;
        out.push(v.clone());
    }
    out
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    opnorm(&(a * b - b * a))
}

/// Matrices serialized as `{"dim": n, "re": [[...]], "im": [[...]]}` (row-major).
pub mod json {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
    pub struct MatrixJson {
        pub dim: usize,
        pub re: Vec<Vec<f64>>,
        pub im: Vec<Vec<f64>>,
    }

    impl MatrixJson {
        pub fn from_matrix(a: &CMatrix) -> Self {
            let rows = a.nrows();
            let cols = a.ncols();
            Self {
                dim: rows,
                re: (0..rows)
                    .map(|i| (0..cols).map(|j| a[(i, j)].re).collect())
                    .collect(),
                im: (0..rows)
                    .map(|i| (0..cols).map(|j| a[(i, j)].im).collect())
                    .collect(),
            }
        }

        /// Validates shape (square, `dim` rows of `dim` entries) and finiteness.
        pub fn to_matrix(&self) -> Result<CMatrix> {
            let n = self.dim;
            if n == 0 {
                return Err(Error::InvalidInput("matrix dim must be positive".into()));
            }
            if self.re.len() != n || self.im.len() != n {
                return Err(Error::InvalidInput(format!(
                    "matrix must have {n} rows in both re and im"
                )));
            }
            for (i, (r, m)) in self.re.iter().zip(&self.im).enumerate() {
                if r.len() != n || m.len() != n {
                    return Err(Error::InvalidInput(format!("row {i} must have {n} entries")));
                }
            }
            let a = CMatrix::from_fn(n, n, |i, j| c(self.re[i][j], self.im[i][j]));
            if !is_finite(&a) {
                return Err(Error::InvalidInput("matrix entries must be finite".into()));
            }
            Ok(a)
        }
    }

    /// Rectangular variant used for dilation bundles (J, Q).
    #[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
    pub struct RectJson {
        pub rows: usize,
        pub cols: usize,
        pub re: Vec<Vec<f64>>,
        pub im: Vec<Vec<f64>>,
    }

    impl RectJson {
        pub fn from_matrix(a: &CMatrix) -> Self {
            Self {
                rows: a.nrows(),
                cols: a.ncols(),
                re: (0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| a[(i, j)].re).collect())
                    .collect(),
                im: (0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| a[(i, j)].im).collect())
                    .collect(),
            }
        }
    }

    pub fn serialize<S: Serializer>(a: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        m.to_matrix().map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &[CMatrix],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let list: Vec<MatrixJson> = v.iter().map(MatrixJson::from_matrix).collect();
            list.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<CMatrix>, D::Error> {
            let list = Vec::<MatrixJson>::deserialize(d)?;
            list.iter()
                .map(|m| m.to_matrix().map_err(serde::de::Error::custom))
                .collect()
        }
    }

    /// Serde adapter for rectangular matrices (embeddings `J`, `Q`).
    pub mod rect {
        use super::*;

        pub fn serialize<S: Serializer>(a: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
            RectJson::from_matrix(a).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<CMatrix, D::Error> {
            let m = RectJson::deserialize(d)?;
            if m.re.len() != m.rows
                || m.im.len() != m.rows
                || m.re.iter().chain(&m.im).any(|r| r.len() != m.cols)
            {
                return Err(serde::de::Error::custom("matrix shape does not match rows/cols"));
            }
            Ok(CMatrix::from_fn(m.rows, m.cols, |i, j| c(m.re[i][j], m.im[i][j])))
        }
    }

    pub fn to_string(a: &CMatrix) -> String {
        serde_json::to_string(&MatrixJson::from_matrix(a)).expect("matrix JSON")
    }

    pub fn from_str(s: &str) -> Result<CMatrix> {
        let m: MatrixJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        m.to_matrix()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = opnorm(&(a - b));
        assert!(d <= tol, "difference {d:.3e} exceeds {tol:.1e}\n{a}\n{b}");
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn opnorm_examples() {
        assert!((opnorm(&identity(3)) - 1.0).abs() < 1e-12);
        assert_eq!(opnorm(&zeros(4)), 0.0);
        let d = diag(&[c(0.5, 0.0), c(0.0, -0.25)]);
        assert!((opnorm(&d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let s = sorted(spectrum(&real_diag(&[1.0, 0.5])));
        assert!((s[0] - c(0.5, 0.0)).norm() < 1e-12 && (s[1] - ONE).norm() < 1e-12);
        let nil = from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]);
        assert!(spectrum(&nil).iter().all(|z| z.norm() < 1e-12));
        let tri = from_rows(&[vec![ONE, ONE], vec![ZERO, c(0.5, 0.0)]]);
        let s = sorted(spectrum(&tri));
        assert!((s[0] - c(0.5, 0.0)).norm() < 1e-12 && (s[1] - ONE).norm() < 1e-12);
    }

    #[test]
    fn schur_reconstructs_cyclic_shift() {
        // The cyclic shift is a classic stall case for unshifted QR.
        let n = 6;
        let p = CMatrix::from_fn(n, n, |i, j| if (j + 1) % n == i { ONE } else { ZERO });
        let sf = schur(&p);
        assert_close(&sf.back(&sf.t), &p, 1e-12);
        for l in sf.eigenvalues() {
            assert!((l.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_examples() {
        let r = resolvent(c(2.0, 0.0), &identity(2)).unwrap();
        assert_close(&r, &identity(2), 1e-14);
        let r = resolvent(c(2.0, 0.0), &real_diag(&[1.0, 0.0])).unwrap();
        assert_close(&r, &real_diag(&[1.0, 0.5]), 1e-14);
        assert!(matches!(
            resolvent(ONE, &real_diag(&[1.0, 0.0])),
            Err(Error::SingularResolvent { .. })
        ));
    }

    #[test]
    fn sqrt_examples() {
        assert_close(&principal_sqrt(&identity(2)).unwrap(), &identity(2), 1e-14);
        assert_close(
            &principal_sqrt(&real_diag(&[4.0, 9.0])).unwrap(),
            &real_diag(&[2.0, 3.0]),
            1e-13,
        );
        assert!(matches!(
            principal_sqrt(&real_diag(&[-1.0, 1.0])),
            Err(Error::NotSectorial(_))
        ));
    }

    #[test]
    fn sqrt_of_singular_semisimple() {
        // diag(0, 0.7) conjugated by a non-unitary similarity.
        let s = from_rows(&[vec![ONE, c(2.0, 1.0)], vec![ZERO, ONE]]);
        let s_inv = s.clone().try_inverse().unwrap();
        let a = &s * real_diag(&[0.0, 0.7]) * &s_inv;
        let x = principal_sqrt(&a).unwrap();
        assert_close(&(&x * &x), &a, 1e-12);
        let expect = &s * real_diag(&[0.0, 0.7f64.sqrt()]) * &s_inv;
        assert_close(&x, &expect, 1e-12);
    }

    #[test]
    fn sqrt_rejects_nilpotent() {
        let nil = from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]);
        assert!(matches!(principal_sqrt(&nil), Err(Error::NotSectorial(_))));
    }

    #[test]
    fn kron_examples() {
        let b = from_rows(&[vec![ONE, c(2.0, 0.0)], vec![c(0.0, 3.0), c(4.0, -1.0)]]);
        let k = kron(&identity(2), &b);
        let mut bd = zeros(4);
        bd.view_mut((0, 0), (2, 2)).copy_from(&b);
        bd.view_mut((2, 2), (2, 2)).copy_from(&b);
        assert_close(&k, &bd, 0.0);
        assert_close(&kron(&b, &identity(1)), &b, 0.0);
        assert!(matches!(
            kron_capped(&identity(70), &identity(70), 4096),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = from_rows(&[vec![c(1.0, -2.0), ZERO], vec![c(0.5, 0.25), I]]);
        let s = json::to_string(&a);
        assert!(s.contains("\"dim\":2"));
        assert_eq!(json::from_str(&s).unwrap(), a);
        assert!(json::from_str(r#"{"dim":2,"re":[[1,2]],"im":[[0,0]]}"#).is_err());
    }
}
