//! Polynomials in several variables on commuting tuples: evaluation,
//! sup-norms over the torus and over products of a region, von Neumann
//! ratios, joint similarity to contractions and the joint dilation of
//! Ritt_E operators with a similar-to-contractions pair.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::{
    ando_dilation, check_commuting, joint_dilation, specific_dilation_with, DilationOptions,
    JointDilation, TruncatedDilation,
};
use crate::error::{Error, Result};
use crate::ergodic::eigen_projection;
use crate::instances::complex_gaussian;
use crate::numerics::{diag, identity, opnorm, spectrum, CMatrix, C64, DEFAULT_KRON_CAP, ONE, ZERO};
use crate::polygonal::{ContourRegion, PointSetE};

/// Polynomial `Σ c_n z_1^{n_1}⋯z_d^{n_d}`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct MultiPoly {
    d: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exponents: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    d: usize,
    terms: Vec<TermJson>,
}

impl From<MultiPoly> for PolyJson {
    fn from(p: MultiPoly) -> Self {
        PolyJson {
            d: p.d,
            terms: p
                .terms
                .into_iter()
                .map(|(exponents, c)| TermJson {
                    exponents,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyJson> for MultiPoly {
    type Error = Error;

    fn try_from(j: PolyJson) -> Result<Self> {
        let mut p = MultiPoly::zero(j.d);
        for t in j.terms {
            if t.exponents.len() != j.d {
                return Err(Error::InvalidInput(format!(
                    "term {:?} has {} exponents, expected {}",
                    t.exponents,
                    t.exponents.len(),
                    j.d
                )));
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
            p.add_term(&t.exponents, C64::new(t.re, t.im));
        }
        Ok(p)
    }
}

impl MultiPoly {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: C64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(&vec![0; d], c);
        p
    }

    /// The coordinate function `z_k` (0-based `k`).
    pub fn variable(d: usize, k: usize) -> Self {
        let mut e = vec![0; d];
        e[k] = 1;
        Self::monomial(&e, ONE)
    }

    pub fn monomial(exponents: &[usize], c: C64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// One variable, `coeffs[i]` multiplying `z^i`.
    pub fn univariate(coeffs: &[C64]) -> Self {
        let mut p = Self::zero(1);
        for (i, &c) in coeffs.iter().enumerate() {
            p.add_term(&[i], c);
        }
        p
    }

    /// `∏_j (z − r_j)` in one variable.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Self::univariate(&coeffs)
    }

    /// Every monomial of total degree `≤ degree` with a standard complex
    /// Gaussian coefficient.
    pub fn random<R: Rng>(rng: &mut R, d: usize, degree: usize) -> Self {
        let mut p = Self::zero(d);
        for e in exponents_up_to(d, degree) {
            p.add_term(&e, complex_gaussian(rng));
        }
        p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exponents: &[usize]) -> C64 {
        self.terms.get(exponents).copied().unwrap_or(ZERO)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest exponent of variable `k`.
    pub fn max_exponent(&self, k: usize) -> usize {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, exponents: &[usize], c: C64) {
        assert_eq!(exponents.len(), self.d, "exponent tuple length");
        let entry = self.terms.entry(exponents.to_vec()).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(exponents);
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut p = Self::zero(self.d);
        for (e, &c) in &self.terms {
            p.add_term(e, c * s);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut p = self.clone();
        for (e, &c) in &other.terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut p = Self::zero(self.d);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<usize> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(&e, c1 * c2);
            }
        }
        p
    }

    /// Scalar value at `z`.
    pub fn eval(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.d);
        let mut s = ZERO;
        for (e, &c) in &self.terms {
            let mut m = c;
            for (zk, &ek) in z.iter().zip(e) {
                m *= zk.powu(ek as u32);
            }
            s += m;
        }
        s
    }

    /// Values at all points of `pts[0] × … × pts[d−1]`, row-major in the
    /// first coordinate. The coefficient tensor is contracted one variable
    /// at a time against the power table of that variable's points.
    pub fn eval_product_grid(&self, pts: &[Vec<C64>]) -> Vec<C64> {
        let d = self.d;
        assert_eq!(pts.len(), d);
        let mut shape: Vec<usize> = (0..d).map(|k| self.max_exponent(k) + 1).collect();
        let mut tensor = vec![ZERO; shape.iter().product()];
        for (e, &c) in &self.terms {
            let mut flat = 0;
            for k in 0..d {
                flat = flat * shape[k] + e[k];
            }
            tensor[flat] = c;
        }
        for k in 0..d {
            let m = shape[k];
            let p = pts[k].len();
            let outer: usize = shape[..k].iter().product();
            let inner: usize = shape[k + 1..].iter().product();
            let table: Vec<Vec<C64>> = pts[k]
                .iter()
                .map(|&z| {
                    let mut row = Vec::with_capacity(m);
                    let mut acc = ONE;
                    for _ in 0..m {
                        row.push(acc);
                        acc *= z;
                    }
                    row
                })
                .collect();
            let mut next = vec![ZERO; outer * p * inner];
            next.par_chunks_mut(p * inner)
                .enumerate()
                .for_each(|(o, chunk)| {
                    for (pi, row) in table.iter().enumerate() {
                        for (e, &w) in row.iter().enumerate() {
                            let src = &tensor[(o * m + e) * inner..(o * m + e + 1) * inner];
                            let dst = &mut chunk[pi * inner..(pi + 1) * inner];
                            for (x, &y) in dst.iter_mut().zip(src) {
                                *x += w * y;
                            }
                        }
                    }
                });
            tensor = next;
            shape[k] = p;
        }
        tensor
    }
}

/// Exponent tuples of total degree `≤ degree`, lexicographic.
pub fn exponents_up_to(d: usize, degree: usize) -> Vec<Vec<usize>> {
    JointDilation::exponent_tuples(d, degree)
}

/// Checks that `t_list` is a nonempty tuple of equal square matrices, one
/// per variable of `phi`.
pub fn check_multipoly_dims(phi: &MultiPoly, t_list: &[CMatrix]) -> Result<()> {
    if t_list.len() != phi.d() {
        return Err(Error::InvalidInput(format!(
            "polynomial in {} variables applied to {} operators",
            phi.d(),
            t_list.len()
        )));
    }
    let Some(first) = t_list.first() else {
        return Err(Error::InvalidInput("empty operator tuple".into()));
    };
    let n = first.nrows();
    if t_list.iter().any(|t| t.nrows() != n || t.ncols() != n) {
        return Err(Error::InvalidInput("operators must be square of equal size".into()));
    }
    Ok(())
}

/// `φ(T_1, …, T_d)` with powers cached per operator.
pub fn eval_multipoly(phi: &MultiPoly, t_list: &[CMatrix]) -> Result<CMatrix> {
    check_multipoly_dims(phi, t_list)?;
    let n = t_list[0].nrows();
    check_commuting(t_list)?;
    let powers: Vec<Vec<CMatrix>> = t_list
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut v = vec![identity(n)];
            for i in 0..phi.max_exponent(k) {
                let next = &v[i] * t;
                v.push(next);
            }
            v
        })
        .collect();
    let mut out = CMatrix::zeros(n, n);
    for (e, &c) in phi.terms() {
        let mut m = identity(n) * c;
        for (k, &ek) in e.iter().enumerate() {
            if ek > 0 {
                m = &powers[k][ek] * m;
            }
        }
        out += m;
    }
    Ok(out)
}

/// Largest number of grid points evaluated by the sup-norm routines.
pub const SUP_GRID_BUDGET: usize = 1 << 22;
const REFINE_CANDIDATES: usize = 8;
const REFINE_SWEEPS: usize = 40;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusSup {
    pub value: f64,
    /// Angular grid spacing before refinement.
    pub spacing: f64,
    /// Angles of the best point found.
    pub argmax: Vec<f64>,
}

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `max |φ|` over the torus: a uniform grid of `grid_per_dim` angles per
/// variable, then coordinate-wise golden-section refinement around the best
/// grid points.
pub fn supnorm_on_torus(phi: &MultiPoly, grid_per_dim: usize) -> Result<TorusSup> {
    let d = phi.d();
    let grid = grid_per_dim.max(1);
    if d == 0 {
        return Ok(TorusSup {
            value: phi.coeff(&[]).norm(),
            spacing: 0.0,
            argmax: Vec::new(),
        });
    }
    let total = grid
        .checked_pow(d as u32)
        .filter(|&t| t <= SUP_GRID_BUDGET)
        .ok_or(Error::BudgetExceeded {
            needed: grid.saturating_pow(d as u32),
            budget: SUP_GRID_BUDGET,
        })?;
    let spacing = TAU / grid as f64;
    let axis: Vec<C64> = (0..grid).map(|i| C64::from_polar(1.0, spacing * i as f64)).collect();
    let values: Vec<f64> = phi
        .eval_product_grid(&vec![axis; d])
        .into_iter()
        .map(|z| z.norm())
        .collect();
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let value_at = |theta: &[f64]| {
        let z: Vec<C64> = theta.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        phi.eval(&z).norm()
    };
    let mut best = TorusSup {
        value: values[order[0]],
        spacing,
        argmax: Vec::new(),
    };
    for &flat in order.iter().take(REFINE_CANDIDATES) {
        let mut theta = vec![0.0; d];
        let mut rest = flat;
        for k in (0..d).rev() {
            theta[k] = spacing * (rest % grid) as f64;
            rest /= grid;
        }
        let centre = theta.clone();
        let mut current = value_at(&theta);
        for _ in 0..REFINE_SWEEPS {
            let before = current;
            for k in 0..d {
                let (arg, val) = golden_max(
                    |t| {
                        let mut th = theta.clone();
                        th[k] = t;
                        value_at(&th)
                    },
                    centre[k] - spacing,
                    centre[k] + spacing,
                    1e-12,
                );
                if val > current {
                    theta[k] = arg;
                    current = val;
                }
            }
            if current - before <= 1e-15 * current.max(1.0) {
                break;
            }
        }
        if current > best.value || best.argmax.is_empty() {
            if current >= best.value {
                best.value = current;
            }
            best.argmax = theta;
        }
    }
    Ok(best)
}

/// `max |φ|` over `(∂Ω)^d`, sampled with `samples_per_piece` points on each
/// boundary piece; by the maximum principle in each variable this is the
/// sup over the closed product domain up to sampling.
pub fn supnorm_on_region_power(
    phi: &MultiPoly,
    region: &ContourRegion,
    samples_per_piece: usize,
) -> Result<f64> {
    let d = phi.d();
    if d == 0 {
        return Ok(phi.coeff(&[]).norm());
    }
    let boundary = region.sample_boundary_with_vertices(samples_per_piece.max(1));
    if boundary
        .len()
        .checked_pow(d as u32)
        .is_none_or(|t| t > SUP_GRID_BUDGET)
    {
        return Err(Error::BudgetExceeded {
            needed: boundary.len().saturating_pow(d as u32),
            budget: SUP_GRID_BUDGET,
        });
    }
    Ok(phi
        .eval_product_grid(&vec![boundary; d])
        .into_iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Domain of the sup-norm in a von Neumann ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupDomain {
    Torus { grid_per_dim: usize },
    RegionPower { region: ContourRegion, samples_per_piece: usize },
}

impl SupDomain {
    pub fn supnorm(&self, phi: &MultiPoly) -> Result<f64> {
        match self {
            SupDomain::Torus { grid_per_dim } => Ok(supnorm_on_torus(phi, *grid_per_dim)?.value),
            SupDomain::RegionPower {
                region,
                samples_per_piece,
            } => supnorm_on_region_power(phi, region, *samples_per_piece),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VnRatio {
    pub ratio: f64,
    pub operator_norm: f64,
    pub sup_norm: f64,
}

/// `‖φ(T_1, …, T_d)‖ / ‖φ‖_∞` over the given domain.
pub fn vn_ratio(t_list: &[CMatrix], phi: &MultiPoly, domain: &SupDomain) -> Result<VnRatio> {
    let value = eval_multipoly(phi, t_list)?;
    let sup_norm = domain.supnorm(phi)?;
    if sup_norm < 1e-14 {
        return Err(Error::DegeneratePoly(sup_norm));
    }
    let operator_norm = opnorm(&value);
    Ok(VnRatio {
        ratio: operator_norm / sup_norm,
        operator_norm,
        sup_norm,
    })
}

/// Margin accepted as a contraction.
pub const MARGIN_TOL: f64 = 1e-8;
/// Margin at which the iterative stage stops early.
const MARGIN_TARGET: f64 = 1e-10;
/// Moduli within this distance of 1 count as peripheral.
const PERIPHERAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMethod {
    Identity,
    WordAverage,
    Spectral,
    AlternatingProjections,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityOptions {
    /// Smallest accepted eigenvalue of `P` normalized to `‖P‖ = 1`.
    pub eps: f64,
    pub max_iter: usize,
    /// Word length of the averaged warm start.
    pub warm_length: usize,
    /// Whether to try the spectral construction before iterating.
    pub spectral: bool,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        Self {
            eps: 1e-10,
            max_iter: 2000,
            warm_length: 6,
            spectral: true,
        }
    }
}

/// `P ≻ 0` with `T_k*PT_k ≼ P` and `S = P^{1/2}`, so that every
/// `S·T_k·S^{-1}` is a contraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityResult {
    #[serde(with = "crate::numerics::json")]
    pub p: CMatrix,
    #[serde(with = "crate::numerics::json")]
    pub s: CMatrix,
    #[serde(with = "crate::numerics::json")]
    pub s_inv: CMatrix,
    /// `‖S·T_k·S^{-1}‖` per operator.
    pub margins: Vec<f64>,
    pub iterations: usize,
    pub feasible: bool,
    pub method: SimilarityMethod,
    /// Smallest eigenvalue of `P` (with `‖P‖ = 1`).
    pub min_eigenvalue: f64,
}

impl SimilarityResult {
    pub fn max_margin(&self) -> f64 {
        self.margins.iter().copied().fold(0.0, f64::max)
    }

    /// `S·T·S^{-1}`.
    pub fn conjugate(&self, t: &CMatrix) -> CMatrix {
        &self.s * t * &self.s_inv
    }
}

fn hermitian(p: &CMatrix) -> CMatrix {
    (p + p.adjoint()) * C64::from(0.5)
}

/// Evaluates a candidate `P`: normalization, square roots and margins.
fn assess(p: &CMatrix, t_list: &[CMatrix]) -> Option<(CMatrix, CMatrix, CMatrix, Vec<f64>, f64)> {
    let h = hermitian(p);
    if !h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return None;
    }
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.max();
    if top <= 0.0 {
        return None;
    }
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l / top).collect();
    let min = lam.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return None;
    }
    let v = &eig.eigenvectors;
    let pn = v * diag(&lam.iter().map(|&l| C64::from(l)).collect::<Vec<_>>()) * v.adjoint();
    let s = v * diag(&lam.iter().map(|&l| C64::from(l.sqrt())).collect::<Vec<_>>()) * v.adjoint();
    let s_inv =
        v * diag(&lam.iter().map(|&l| C64::from(1.0 / l.sqrt())).collect::<Vec<_>>()) * v.adjoint();
    let margins = t_list.iter().map(|t| opnorm(&(&s * t * &s_inv))).collect();
    Some((pn, s, s_inv, margins, min))
}

/// Solves `X = A*XA + Y` by doubling; `None` unless the series converges.
pub fn stein(a: &CMatrix, y: &CMatrix) -> Option<CMatrix> {
    let mut x = y.clone();
    let mut b = a.clone();
    for _ in 0..64 {
        let step = b.adjoint() * &x * &b;
        let size = opnorm(&step);
        x += step;
        if !size.is_finite() {
            return None;
        }
        if size <= 1e-17 * opnorm(&x) {
            return Some(hermitian(&x));
        }
        b = &b * &b;
    }
    None
}

/// Positive map `G_k(X) = Σ_ξ P_ξ*XP_ξ + Σ_j (T^jR)*X(T^jR)` built from the
/// peripheral projections `P_ξ` of `T` and `R = I − Σ_ξ P_ξ`; it satisfies
/// `T*G(X)T = G(X) − R*XR` and commutes with conjugation by anything that
/// commutes with `T`.
struct SpectralMap {
    peripheral: Vec<CMatrix>,
    range: CMatrix,
    interior: CMatrix,
}

impl SpectralMap {
    fn new(t: &CMatrix) -> Option<Self> {
        let n = t.nrows();
        let eigs = spectrum(t);
        if eigs.iter().any(|l| l.norm() > 1.0 + PERIPHERAL_TOL) {
            return None;
        }
        let mut reps: Vec<C64> = Vec::new();
        for l in eigs.iter().filter(|l| l.norm() >= 1.0 - PERIPHERAL_TOL) {
            if reps.iter().all(|r| (r - l).norm() > 1e-6) {
                reps.push(*l);
            }
        }
        let mut peripheral = Vec::with_capacity(reps.len());
        let mut range = identity(n);
        for r in reps {
            let p = eigen_projection(t, r).ok()?;
            range -= &p;
            peripheral.push(p);
        }
        let interior = t * &range;
        Some(Self {
            peripheral,
            range,
            interior,
        })
    }

    fn apply(&self, x: &CMatrix) -> Option<CMatrix> {
        let mut out = stein(&self.interior, &(self.range.adjoint() * x * &self.range))?;
        for p in &self.peripheral {
            out += p.adjoint() * x * p;
        }
        Some(hermitian(&out))
    }
}

fn spectral_candidate(t_list: &[CMatrix]) -> Option<CMatrix> {
    let n = t_list[0].nrows();
    let maps: Vec<SpectralMap> = t_list.iter().map(SpectralMap::new).collect::<Option<_>>()?;
    let mut p = identity(n);
    for m in maps.iter().rev() {
        p = m.apply(&p)?;
        let scale = opnorm(&p);
        if !(scale.is_finite() && scale > 0.0) {
            return None;
        }
        p /= C64::from(scale);
    }
    Some(p)
}

/// `(1/|W|) Σ_{|n| ≤ L} (T^n)*T^n` over multi-indices.
fn word_average(t_list: &[CMatrix], length: usize) -> CMatrix {
    let n = t_list[0].nrows();
    let tuples = exponents_up_to(t_list.len(), length);
    let mut p = CMatrix::zeros(n, n);
    for e in &tuples {
        let mut w = identity(n);
        for (k, &ek) in e.iter().enumerate() {
            for _ in 0..ek {
                w = &t_list[k] * w;
            }
        }
        p += w.adjoint() * &w;
    }
    p / C64::from(tuples.len() as f64)
}

/// Projection of a Hermitian matrix onto `{X ≽ floor·I}`.
fn clip_below(x: &CMatrix, floor: f64) -> CMatrix {
    let eig = hermitian(x).symmetric_eigen();
    let lam: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::from(l.max(floor))).collect();
    &eig.eigenvectors * diag(&lam) * eig.eigenvectors.adjoint()
}

fn unvec(v: &nalgebra::DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

fn vec_of(x: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(x.as_slice())
}

/// Alternating projections between `{(P, Z) : Z_k = P − T_k*PT_k}` and
/// `{P ≽ I, Z_k ≽ 0}`. Returns the best iterate and the iterations used.
fn alternating_projections(
    t_list: &[CMatrix],
    start: &CMatrix,
    max_iter: usize,
) -> (CMatrix, f64, usize) {
    let n = t_list[0].nrows();
    let n2 = n * n;
    let ops: Vec<CMatrix> = t_list
        .iter()
        .map(|t| identity(n2) - t.transpose().kronecker(&t.adjoint()))
        .collect();
    let mut normal = identity(n2);
    for l in &ops {
        normal += l.adjoint() * l;
    }
    let lu = normal.lu();
    let lift = |p: &CMatrix| -> Vec<CMatrix> {
        t_list.iter().map(|t| p - t.adjoint() * p * t).collect()
    };

    let scale = hermitian_min_positive(start);
    let mut p = hermitian(start) / C64::from(scale);
    let mut z = lift(&p);
    let mut best = p.clone();
    let mut best_margin = f64::INFINITY;
    let mut since_improvement = 0;
    let mut used = 0;
    for it in 0..max_iter {
        used = it + 1;
        let p_hat = clip_below(&p, 1.0);
        let mut rhs = vec_of(&p_hat);
        for (l, zk) in ops.iter().zip(&z) {
            rhs += l.adjoint() * vec_of(&clip_below(zk, 0.0));
        }
        let Some(sol) = lu.solve(&rhs) else {
            break;
        };
        p = hermitian(&unvec(&sol, n));
        z = lift(&p);
        if let Some((_, _, _, margins, _)) = assess(&p, t_list) {
            let m = margins.iter().copied().fold(0.0, f64::max);
            if m < best_margin - 1e-14 {
                if m < best_margin * (1.0 - 1e-6) || best_margin.is_infinite() {
                    since_improvement = 0;
                }
                best_margin = m;
                best = p.clone();
            }
            if m <= 1.0 + MARGIN_TARGET {
                break;
            }
        }
        since_improvement += 1;
        if since_improvement > 400 {
            break;
        }
    }
    (best, best_margin, used)
}

fn hermitian_min_positive(p: &CMatrix) -> f64 {
    let m = hermitian(p).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if m > 0.0 {
        m
    } else {
        opnorm(p).max(1.0)
    }
}

/// Keeps the candidate if it beats `best`; true when it meets the target.
fn consider(
    best: &mut Option<(SimilarityResult, f64)>,
    t_list: &[CMatrix],
    opts: &SimilarityOptions,
    p: &CMatrix,
    method: SimilarityMethod,
    iterations: usize,
) -> bool {
    let Some((pn, s, s_inv, margins, min)) = assess(p, t_list) else {
        return false;
    };
    let m = margins.iter().copied().fold(0.0, f64::max);
    let ok = m <= 1.0 + MARGIN_TOL && min >= opts.eps;
    let score = if min >= opts.eps { m } else { f64::INFINITY };
    if best.as_ref().is_none_or(|(_, b)| score < *b) {
        *best = Some((
            SimilarityResult {
                p: pn,
                s,
                s_inv,
                margins,
                iterations,
                feasible: ok,
                method,
                min_eigenvalue: min,
            },
            score,
        ));
    }
    ok && m <= 1.0 + MARGIN_TARGET
}

/// Common `P ≻ 0` with `T_k*PT_k ≼ P` for a commuting tuple.
///
/// Candidates, in order: `P = I`; the word average of length
/// `opts.warm_length`; a spectral construction (peripheral projections
/// plus Stein sums on the interior part, nested over the operators), which
/// is exact whenever every operator has spectrum in the closed disc and
/// semisimple peripheral eigenvalues; and alternating projections started
/// from the best of these. Fails with `Infeasible` if no candidate reaches
/// margins `≤ 1 + 1e-8` with `λ_min(P) ≥ eps‖P‖`.
pub fn joint_similarity(t_list: &[CMatrix], opts: &SimilarityOptions) -> Result<SimilarityResult> {
    let Some(first) = t_list.first() else {
        return Err(Error::InvalidInput("empty operator tuple".into()));
    };
    let n = first.nrows();
    if t_list.iter().any(|t| t.nrows() != n || t.ncols() != n) {
        return Err(Error::InvalidInput("operators must be square of equal size".into()));
    }
    check_commuting(t_list)?;

    let mut best: Option<(SimilarityResult, f64)> = None;
    if consider(&mut best, t_list, opts, &identity(n), SimilarityMethod::Identity, 0) {
        return Ok(best.unwrap().0);
    }
    let warm = word_average(t_list, opts.warm_length);
    if consider(&mut best, t_list, opts, &warm, SimilarityMethod::WordAverage, 0) {
        return Ok(best.unwrap().0);
    }
    if opts.spectral {
        if let Some(p) = spectral_candidate(t_list) {
            if consider(&mut best, t_list, opts, &p, SimilarityMethod::Spectral, 0) {
                return Ok(best.unwrap().0);
            }
        }
    }
    let start = best
        .as_ref()
        .map(|(r, _)| r.p.clone())
        .unwrap_or_else(|| warm.clone());
    let (p, _, used) = alternating_projections(t_list, &start, opts.max_iter);
    consider(&mut best, t_list, opts, &p, SimilarityMethod::AlternatingProjections, used);
    let (result, score) = best.expect("identity candidate is always assessed");
    if result.feasible {
        Ok(result)
    } else {
        Err(Error::Infeasible {
            best_margin: score.min(result.max_margin()),
            iterations: used,
        })
    }
}

/// Joint dilation of a commuting tuple `(T_1, …, T_d)`, `d ≥ 3`: the first
/// `d − 2` operators are Ritt_E and dilated individually, the last pair is
/// brought to contractions `C_k = S·T_k·S^{-1}` and dilated with Ando's
/// construction, with `J_tail = J_0·S` and `Q_tail = S^{-1}·J_0*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleDilation {
    pub joint: JointDilation,
    pub parts: Vec<TruncatedDilation>,
    pub similarity: SimilarityResult,
    /// `max ‖T^n − QV^nJ‖` of each individual part.
    pub part_errors: Vec<f64>,
}

pub fn tuple_dilation(
    t_list: &[CMatrix],
    e: &PointSetE,
    budget: usize,
    dil_opts: &DilationOptions,
    sim_opts: &SimilarityOptions,
) -> Result<TupleDilation> {
    tuple_dilation_capped(t_list, e, budget, dil_opts, sim_opts, DEFAULT_KRON_CAP)
}

pub fn tuple_dilation_capped(
    t_list: &[CMatrix],
    e: &PointSetE,
    budget: usize,
    dil_opts: &DilationOptions,
    sim_opts: &SimilarityOptions,
    cap: usize,
) -> Result<TupleDilation> {
    let d = t_list.len();
    if d < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 operators, got {d}")));
    }
    check_commuting(t_list)?;
    let pair = &t_list[d - 2..];
    let similarity = joint_similarity(pair, sim_opts)?;
    let contract = |t: &CMatrix| {
        let c = similarity.conjugate(t);
        let norm = opnorm(&c);
        // Rounding can leave the margin a hair above one.
        if norm > 1.0 {
            c / C64::from(norm)
        } else {
            c
        }
    };
    let c1 = contract(&pair[0]);
    let c2 = contract(&pair[1]);
    let tail = ando_dilation(&c1, &c2, budget)?.conjugated(&similarity.s_inv, &similarity.s);

    let mut parts = Vec::with_capacity(d - 2);
    let mut part_errors = Vec::with_capacity(d - 2);
    for t in &t_list[..d - 2] {
        let dil = specific_dilation_with(t, e, budget, dil_opts)?;
        part_errors.push(crate::dilation::dilation_check(&dil, t, budget));
        parts.push(dil);
    }
    let refs: Vec<&TruncatedDilation> = parts.iter().collect();
    let joint = joint_dilation(&refs, Some(&tail), t_list, cap)?;
    Ok(TupleDilation {
        joint,
        parts,
        similarity,
        part_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_similarity, random_unitary, stream_rng};
    use crate::numerics::{c, from_rows, real_diag};
    use crate::polygonal::enclosing_polygon;

    #[test]
    fn poly_algebra() {
        let p = MultiPoly::from_roots(&[ONE, -ONE]);
        assert_eq!(p.coeff(&[0]), -ONE);
        assert_eq!(p.coeff(&[1]), ZERO);
        assert_eq!(p.len(), 2);
        let x = MultiPoly::variable(2, 0);
        let y = MultiPoly::variable(2, 1);
        let q = x.add(&y).mul(&x.add(&y.scale(-ONE)));
        assert_eq!(q.coeff(&[1, 1]), ZERO);
        assert_eq!(q.degree(), 2);
        let z = [c(0.3, 0.1), c(-0.2, 0.5)];
        assert!((q.eval(&z) - (z[0] * z[0] - z[1] * z[1])).norm() < 1e-15);
        let json = serde_json::to_string(&q).unwrap();
        let back: MultiPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"d":2,"terms":[{"exponents":[1],"re":1,"im":0}]}"#).is_err());
    }

    #[test]
    fn eval_examples() {
        let t1 = real_diag(&[0.5, -0.2]);
        let t2 = real_diag(&[0.3, 0.9]);
        let one = MultiPoly::constant(2, ONE);
        assert_eq!(eval_multipoly(&one, &[t1.clone(), t2.clone()]).unwrap(), identity(2));
        let xy = MultiPoly::monomial(&[1, 1], ONE);
        let v = eval_multipoly(&xy, &[t1.clone(), t2.clone()]).unwrap();
        assert!(opnorm(&(v - real_diag(&[0.15, -0.18]))) < 1e-15);
        let j = from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        assert!(matches!(
            eval_multipoly(&xy, &[t1, j]),
            Err(Error::NotCommuting(_))
        ));
    }

    #[test]
    fn torus_examples() {
        let z5 = MultiPoly::monomial(&[5], ONE);
        assert!((supnorm_on_torus(&z5, 64).unwrap().value - 1.0).abs() < 1e-14);
        let p = MultiPoly::univariate(&[ONE, ONE]);
        assert!((supnorm_on_torus(&p, 7).unwrap().value - 2.0).abs() < 1e-12);
        let s = MultiPoly::variable(2, 0).add(&MultiPoly::variable(2, 1));
        assert!((supnorm_on_torus(&s, 9).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let delta = enclosing_polygon(&e, 0.5).unwrap();
        let one = MultiPoly::constant(1, ONE);
        assert!((supnorm_on_region_power(&one, &delta, 16).unwrap() - 1.0).abs() < 1e-15);
        let z = MultiPoly::variable(1, 0);
        let v = supnorm_on_region_power(&z, &delta, 16).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn von_neumann_for_contractions() {
        let mut rng = stream_rng(5, 0);
        let u = random_unitary(&mut rng, 3);
        let t = &u * real_diag(&[0.9, 0.4, 0.7]) * u.adjoint() * c(0.0, 1.0);
        for _ in 0..10 {
            let phi = MultiPoly::random(&mut rng, 1, 6);
            let r = vn_ratio(std::slice::from_ref(&t), &phi, &SupDomain::Torus { grid_per_dim: 256 }).unwrap();
            assert!(r.ratio <= 1.0 + 1e-9, "{}", r.ratio);
        }
    }

    #[test]
    fn similarity_examples() {
        let opts = SimilarityOptions::default();
        let r = joint_similarity(&[real_diag(&[0.5, 0.9])], &opts).unwrap();
        assert_eq!(r.method, SimilarityMethod::Identity);

        let mut rng = stream_rng(11, 0);
        let s0 = random_similarity(&mut rng, 2, 20.0);
        let s0i = s0.clone().try_inverse().unwrap();
        let t = &s0 * real_diag(&[0.9, 0.5]) * &s0i;
        let r = joint_similarity(std::slice::from_ref(&t), &opts).unwrap();
        assert!(r.max_margin() <= 1.0 + 1e-8);

        // Peripheral eigenvalues: only non-strict feasibility.
        let t1 = &s0 * diag(&[ONE, c(0.3, 0.2)]) * &s0i;
        let t2 = &s0 * diag(&[c(0.2, 0.0), -ONE]) * &s0i;
        let r = joint_similarity(&[t1.clone(), t2.clone()], &opts).unwrap();
        for t in [&t1, &t2] {
            assert!(opnorm(&r.conjugate(t)) <= 1.0 + 1e-8);
        }

        let jordan = from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]);
        let opts = SimilarityOptions {
            max_iter: 300,
            ..opts
        };
        assert!(matches!(
            joint_similarity(&[jordan], &opts),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn tuple_dilation_diagonal() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let t1 = real_diag(&[1.0, 0.4]);
        let t2 = real_diag(&[0.5, 0.3]);
        let t3 = real_diag(&[0.2, 0.7]);
        let list = [t1, t2, t3];
        let td = tuple_dilation(
            &list,
            &e,
            6,
            &DilationOptions::default(),
            &SimilarityOptions::default(),
        )
        .unwrap();
        assert!(td.joint.check(&list, 6) <= 1e-7);
    }
}
