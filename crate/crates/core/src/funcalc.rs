//! Polynomial functional calculus through Cauchy integrals over the
//! boundary of `E_r` or of a polygon, in one and several variables.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ergodic::full_decomposition;
use crate::instances::stream_rng;
use crate::multivar::{
    check_multipoly_dims, eval_multipoly, joint_similarity, supnorm_on_region_power, MultiPoly,
    SimilarityOptions,
};
use crate::numerics::{identity, opnorm, spectrum, CMatrix, Resolvent, C64};
use crate::polygonal::{
    build_er, classify_ritt_with_r, enclosing_polygon, ContourRegion, GridSpec, PointSetE, Verdict,
};

/// Smallest accepted distance between the spectrum and the contour.
pub const CONTOUR_GAP: f64 = 1e-6;
/// Largest `nodes × variables` product accepted by the multivariate rule.
pub const NODE_BUDGET: usize = 1 << 16;
const MAX_PANEL_DEPTH: usize = 30;

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule on every piece of a closed contour; arcs are
/// parametrized by angle and the weights carry `dz`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourQuadrature {
    pub region: ContourRegion,
    /// Gauss nodes on each panel.
    pub nodes_per_piece: usize,
    pub panels: usize,
    pub points: Vec<C64>,
    /// `w_j·z'(t_j)`, so that `∮f dz ≈ Σ weights_j f(points_j)`.
    pub weights: Vec<C64>,
}

impl ContourQuadrature {
    /// One panel per piece.
    pub fn new(region: &ContourRegion, nodes_per_piece: usize) -> Self {
        let panels: Vec<(usize, f64, f64)> = (0..region.pieces.len()).map(|i| (i, 0.0, 1.0)).collect();
        Self::from_panels(region, nodes_per_piece, &panels)
    }

    /// Panels halved until each is no longer than its distance to every
    /// point of `avoid` (typically the spectrum), so the rule converges
    /// geometrically even when eigenvalues approach the contour.
    pub fn adapted(region: &ContourRegion, nodes_per_panel: usize, avoid: &[C64]) -> Self {
        let mut panels = Vec::new();
        let mut stack: Vec<(usize, f64, f64, usize)> =
            (0..region.pieces.len()).rev().map(|i| (i, 0.0, 1.0, 0)).collect();
        while let Some((i, a, b, depth)) = stack.pop() {
            let piece = &region.pieces[i];
            let length = piece.length() * (b - a);
            let near = avoid.iter().any(|&l| {
                (0..=16).any(|k| (piece.point(a + (b - a) * k as f64 / 16.0) - l).norm() < length)
            });
            if near && depth < MAX_PANEL_DEPTH {
                let mid = 0.5 * (a + b);
                stack.push((i, mid, b, depth + 1));
                stack.push((i, a, mid, depth + 1));
            } else {
                panels.push((i, a, b));
            }
        }
        Self::from_panels(region, nodes_per_panel, &panels)
    }

    fn from_panels(region: &ContourRegion, nodes: usize, panels: &[(usize, f64, f64)]) -> Self {
        let (x, w) = gauss_legendre(nodes);
        let sign = if region.positively_oriented { 1.0 } else { -1.0 };
        let mut points = Vec::with_capacity(x.len() * panels.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for &(i, a, b) in panels {
            let piece = &region.pieces[i];
            for (&xi, &wi) in x.iter().zip(&w) {
                let t = a + 0.5 * (xi + 1.0) * (b - a);
                points.push(piece.point(t));
                weights.push(piece.derivative(t) * (0.5 * wi * (b - a) * sign));
            }
        }
        Self {
            region: region.clone(),
            nodes_per_piece: nodes,
            panels: panels.len(),
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∮ f(z) dz`.
    pub fn integrate(&self, f: impl Fn(C64) -> C64) -> C64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// `(1/2πi) ∮ dz/(z − z₀)`.
    pub fn winding(&self, z0: C64) -> C64 {
        self.integrate(|z| 1.0 / (z - z0)) / C64::new(0.0, TAU)
    }
}

/// Checks that every eigenvalue lies inside the region, at least
/// `CONTOUR_GAP` away from its boundary.
fn check_inside(res: &Resolvent, region: &ContourRegion) -> Result<()> {
    for l in res.spectrum() {
        let distance = region.distance_to_boundary(l);
        if !region.contains(l) || distance <= CONTOUR_GAP {
            return Err(Error::SpectrumOnContour {
                point: format!("{l}"),
                distance: if region.contains(l) { distance } else { 0.0 },
            });
        }
    }
    Ok(())
}

/// `(1/2πi) Σ_j w_j z_j^e R(z_j, T)` for `e = 0..=max_power`, summed in the
/// Schur basis in node order and transformed back once.
fn moment_matrices(t: &CMatrix, quad: &ContourQuadrature, max_power: usize) -> Result<Vec<CMatrix>> {
    let res = Resolvent::new(t);
    check_inside(&res, &quad.region)?;
    let n = t.nrows();
    let parts: Vec<Result<Vec<CMatrix>>> = quad
        .points
        .par_iter()
        .zip(&quad.weights)
        .map(|(&z, &w)| {
            let r = res.triangular_at(z)?;
            let mut out = Vec::with_capacity(max_power + 1);
            let mut coef = w;
            for _ in 0..=max_power {
                out.push(&r * coef);
                coef *= z;
            }
            Ok(out)
        })
        .collect();
    let mut sums = vec![CMatrix::zeros(n, n); max_power + 1];
    for part in parts {
        for (s, m) in sums.iter_mut().zip(part?) {
            *s += m;
        }
    }
    let scale = C64::new(0.0, TAU).inv();
    Ok(sums
        .into_iter()
        .map(|s| res.schur().back(&(s * scale)))
        .collect())
}

/// `(1/2πi) ∮ φ(z) R(z, T) dz`.
pub fn contour_eval_1d(phi: &MultiPoly, t: &CMatrix, quad: &ContourQuadrature) -> Result<CMatrix> {
    if phi.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "expected a polynomial in one variable, got {}",
            phi.d()
        )));
    }
    let res = Resolvent::new(t);
    check_inside(&res, &quad.region)?;
    let n = t.nrows();
    let parts: Vec<Result<CMatrix>> = quad
        .points
        .par_iter()
        .zip(&quad.weights)
        .map(|(&z, &w)| Ok(res.triangular_at(z)? * (w * phi.eval(&[z]))))
        .collect();
    let mut sum = CMatrix::zeros(n, n);
    for p in parts {
        sum += p?;
    }
    Ok(res.schur().back(&(sum / C64::new(0.0, TAU))))
}

/// The `d`-fold integral
/// `(1/2πi)^d ∮⋯∮ φ(z_1, …, z_d) R(z_1, T_1)⋯R(z_d, T_d) dz_1⋯dz_d`
/// with the tensor-product rule. As `φ` is a polynomial the tensor sum
/// factors through the moment matrices `M_k[e] = (1/2πi)Σ_j w_j z_j^e R(z_j, T_k)`,
/// so the rule is evaluated as `Σ_n c_n M_1[n_1]⋯M_d[n_d]`.
pub fn contour_eval_multi(
    phi: &MultiPoly,
    t_list: &[CMatrix],
    quad: &ContourQuadrature,
) -> Result<CMatrix> {
    check_multipoly_dims(phi, t_list)?;
    let d = t_list.len();
    if d > 3 {
        return Err(Error::InvalidInput(format!(
            "multivariate quadrature supports d ≤ 3, got {d}"
        )));
    }
    let needed = quad.len() * d;
    if needed > NODE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: NODE_BUDGET,
        });
    }
    crate::dilation::check_commuting(t_list)?;
    let moments: Vec<Vec<CMatrix>> = t_list
        .iter()
        .enumerate()
        .map(|(k, t)| moment_matrices(t, quad, phi.max_exponent(k)))
        .collect::<Result<_>>()?;
    let n = t_list[0].nrows();
    let mut out = CMatrix::zeros(n, n);
    for (e, &c) in phi.terms() {
        let mut m = identity(n) * c;
        for (k, &ek) in e.iter().enumerate() {
            m = &moments[k][ek] * m;
        }
        out += m;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuncalcOptions {
    /// Gauss nodes per panel of the adapted rule.
    pub nodes_per_panel: usize,
    pub cesaro_length: usize,
    pub projection_tol: f64,
}

impl Default for FuncalcOptions {
    fn default() -> Self {
        Self {
            nodes_per_panel: 32,
            cesaro_length: 1 << 16,
            projection_tol: 1e-10,
        }
    }
}

/// `φ(T) = Σ_j φ(ξ_j)P_j + C·P` where `P` is the range projection of the
/// ergodic decomposition and `C` the Cauchy integral over `∂E_r` of the
/// compression `PTP` (whose spectrum is that of `T` off `E`, plus `0`).
pub fn polygonal_calculus(
    phi: &MultiPoly,
    t: &CMatrix,
    e: &PointSetE,
    r: f64,
    opts: &FuncalcOptions,
) -> Result<CMatrix> {
    if phi.d() != 1 {
        return Err(Error::InvalidInput("polygonal calculus takes one variable".into()));
    }
    let region = build_er(e, r)?;
    crate::polygonal::check_spectrum_in_region(t, e, &region)?;
    let dec = full_decomposition(t, e, opts.cesaro_length, opts.projection_tol)?;
    let p = &dec.range_projection;
    let mut out = CMatrix::zeros(t.nrows(), t.nrows());
    for (xi, pj) in e.points().iter().zip(&dec.projections) {
        out += pj * phi.eval(&[*xi]);
    }
    if opnorm(p) > 1e-12 {
        let compressed = p * t * p;
        let quad = ContourQuadrature::adapted(&region, opts.nodes_per_panel, &spectrum(&compressed));
        out += contour_eval_1d(phi, &compressed, &quad)? * p;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Theorem51Options {
    pub deg_max: usize,
    pub samples_per_degree: usize,
    /// Boundary samples per polygon edge for the sup-norm over `Δ^d`.
    pub boundary_per_piece: usize,
    /// One-sided significance level of the growth test.
    pub alpha: f64,
}

impl Default for Theorem51Options {
    fn default() -> Self {
        Self {
            deg_max: 8,
            samples_per_degree: 25,
            boundary_per_piece: 24,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeRow {
    pub degree: usize,
    pub samples: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Empirical check of `‖φ(T_1, …, T_d)‖ ≤ C‖φ‖_{∞,Δ^d}` over random
/// polynomials of growing degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem51Report {
    pub d: usize,
    pub polygon: ContourRegion,
    pub rows: Vec<DegreeRow>,
    /// `(degree, ratio)` for every sampled polynomial.
    pub samples: Vec<(usize, f64)>,
    /// Least-squares slope of ratio against degree.
    pub slope: f64,
    /// One-sided p-value for a positive slope.
    pub p_value: f64,
    pub max_ratio: f64,
    /// Resolvent constants from the Ritt classification of each operator.
    pub ritt_constants: Vec<f64>,
    pub similarity_margin: f64,
    pub passes: bool,
    pub method: String,
}

/// OLS slope of `y` on `x` and the one-sided p-value of `slope > 0`.
pub fn slope_test(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 3 {
        return (0.0, 1.0);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = (ssr / (n - 2.0) / sxx).sqrt();
    if se == 0.0 {
        return (slope, if slope > 0.0 { 0.0 } else { 1.0 });
    }
    let dist = StudentsT::new(0.0, 1.0, n - 2.0).expect("valid t distribution");
    (slope, 1.0 - dist.cdf(slope / se))
}

/// Bounded-ratio certificate on `Δ = enclosing_polygon(E, r)`.
///
/// Requires every operator to classify as Ritt_E on the given grid and the
/// tuple to be jointly similar to contractions. For each degree `1..=deg_max`
/// samples random polynomials (one RNG stream per sample), records
/// `‖φ(T)‖/‖φ‖_{∞,Δ^d}` and passes when the ratios show no positive trend
/// in degree at level `alpha`.
pub fn theorem51_certificate(
    t_list: &[CMatrix],
    e: &PointSetE,
    r: f64,
    seed: u64,
    grid: &GridSpec,
    opts: &Theorem51Options,
) -> Result<Theorem51Report> {
    let d = t_list.len();
    if d == 0 {
        return Err(Error::InvalidInput("empty operator tuple".into()));
    }
    let mut ritt_constants = Vec::with_capacity(d);
    for (k, t) in t_list.iter().enumerate() {
        let cert = classify_ritt_with_r(t, e, grid, r);
        if cert.verdict != Verdict::Pass {
            return Err(Error::InvalidInput(format!(
                "operator {} is not certified Ritt_E (verdict {:?})",
                k + 1,
                cert.verdict
            )));
        }
        ritt_constants.push(cert.m_estimate);
    }
    let similarity = joint_similarity(t_list, &SimilarityOptions::default())?;
    let polygon = enclosing_polygon(e, r)?;

    let jobs: Vec<(usize, usize)> = (1..=opts.deg_max)
        .flat_map(|deg| (0..opts.samples_per_degree).map(move |i| (deg, i)))
        .collect();
    let results: Vec<Result<(usize, f64)>> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(deg, _))| {
            let mut rng = stream_rng(seed, idx as u64);
            let phi = random_poly_of_degree(&mut rng, d, deg);
            let value = opnorm(&eval_multipoly(&phi, t_list)?);
            let sup = supnorm_on_region_power(&phi, &polygon, opts.boundary_per_piece)?;
            if sup < 1e-14 {
                return Err(Error::DegeneratePoly(sup));
            }
            Ok((deg, value / sup))
        })
        .collect();
    let samples: Vec<(usize, f64)> = results.into_iter().collect::<Result<_>>()?;

    let rows = (1..=opts.deg_max)
        .map(|deg| {
            let vals: Vec<f64> = samples.iter().filter(|s| s.0 == deg).map(|s| s.1).collect();
            DegreeRow {
                degree: deg,
                samples: vals.len(),
                max_ratio: vals.iter().copied().fold(0.0, f64::max),
                mean_ratio: vals.iter().sum::<f64>() / vals.len().max(1) as f64,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(k, v)| (k as f64, v)).collect();
    let (slope, p_value) = slope_test(&pts);
    let max_ratio = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(Theorem51Report {
        d,
        polygon,
        rows,
        samples,
        slope,
        p_value,
        max_ratio,
        ritt_constants,
        similarity_margin: similarity.max_margin(),
        passes: p_value >= opts.alpha && max_ratio.is_finite(),
        method: "empirical bounded-ratio test over random polynomials".into(),
    })
}

/// Random polynomial with every monomial of total degree `≤ degree` and a
/// nonzero top-degree part.
fn random_poly_of_degree<R: Rng>(rng: &mut R, d: usize, degree: usize) -> MultiPoly {
    let p = MultiPoly::random(rng, d, degree);
    if p.degree() == degree {
        p
    } else {
        let mut e = vec![0; d];
        e[0] = degree;
        p.add(&MultiPoly::monomial(&e, C64::from(1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, diag, from_rows, real_diag, ONE, ZERO};

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // Exact for degree 9.
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(64);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((i - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn winding_numbers() {
        let e = PointSetE::from_angles(&[0.0, 2.0, 4.0]).unwrap();
        for region in [build_er(&e, 0.5).unwrap(), enclosing_polygon(&e, 0.5).unwrap()] {
            let q = ContourQuadrature::new(&region, 64);
            assert!((q.winding(c(0.1, -0.05)) - ONE).norm() < 1e-10);
            assert!(q.winding(c(1.5, 0.3)).norm() < 1e-10);
        }
    }

    #[test]
    fn contour_examples() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let q = ContourQuadrature::new(&build_er(&e, 0.5).unwrap(), 64);
        let t = from_rows(&[vec![c(0.3, 0.1), c(0.2, 0.0)], vec![ZERO, c(-0.2, 0.1)]]);
        let one = MultiPoly::constant(1, ONE);
        assert!(opnorm(&(contour_eval_1d(&one, &t, &q).unwrap() - identity(2))) < 1e-10);
        let z = MultiPoly::variable(1, 0);
        assert!(opnorm(&(contour_eval_1d(&z, &t, &q).unwrap() - &t)) < 1e-10);
        assert!(matches!(
            contour_eval_1d(&z, &real_diag(&[1.0]), &q),
            Err(Error::SpectrumOnContour { .. })
        ));
    }

    #[test]
    fn multi_examples() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let q = ContourQuadrature::new(&build_er(&e, 0.5).unwrap(), 48);
        let t1 = real_diag(&[0.3, -0.2]);
        let t2 = diag(&[c(0.1, 0.2), c(0.4, 0.0)]);
        let xy = MultiPoly::monomial(&[1, 1], ONE);
        let v = contour_eval_multi(&xy, &[t1.clone(), t2.clone()], &q).unwrap();
        assert!(opnorm(&(v - &t1 * &t2)) < 1e-8);
    }

    #[test]
    fn polygonal_examples() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let phi = MultiPoly::univariate(&[c(0.5, 0.0), c(-1.0, 0.5), c(0.0, 2.0), ONE]);
        let t = real_diag(&[1.0, 0.5]);
        let v = polygonal_calculus(&phi, &t, &e, 0.6, &FuncalcOptions::default()).unwrap();
        let want = diag(&[phi.eval(&[ONE]), phi.eval(&[c(0.5, 0.0)])]);
        assert!(opnorm(&(v - want)) < 1e-8);

        let xi = C64::from_polar(1.0, 1.0);
        let e = PointSetE::new(vec![xi]).unwrap();
        let v = polygonal_calculus(&phi, &(identity(2) * xi), &e, 0.5, &FuncalcOptions::default())
            .unwrap();
        assert!(opnorm(&(v - identity(2) * phi.eval(&[xi]))) < 1e-10);
    }

    #[test]
    fn slope_of_flat_and_rising_data() {
        let flat: Vec<(f64, f64)> = (0..40).map(|i| ((i % 8) as f64, 1.0 + 0.01 * ((i * 7 % 5) as f64))).collect();
        assert!(slope_test(&flat).1 > 0.05);
        let rising: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, i as f64 + ((i * 3 % 7) as f64))).collect();
        assert!(slope_test(&rising).1 < 1e-6);
    }
}
