//! Peripheral point sets `E ⊂ 𝕋`, the convex regions `E_r` and enclosing
//! polygons `Δ`, and numerical Ritt_E certificates.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, identity, CMatrix, Resolvent, C64};

/// Tolerance on `|ξ| = 1` for peripheral points.
pub const UNIMODULAR_TOL: f64 = 1e-12;
/// Minimum pairwise distance between peripheral points.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Tolerance used when chaining contour pieces.
pub const CHAIN_TOL: f64 = 1e-12;

/// Finite set of distinct unimodular points `{ξ_1, …, ξ_N}`, kept in the
/// order supplied (index order matters for the Taylor weights and the
/// ergodic projections).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSetE {
    points: Vec<C64>,
}

impl PointSetE {
    pub fn new(points: Vec<C64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("E must contain at least one point".into()));
        }
        for (j, p) in points.iter().enumerate() {
            if !(p.re.is_finite() && p.im.is_finite()) || (p.norm() - 1.0).abs() > UNIMODULAR_TOL {
                return Err(Error::InvalidInput(format!(
                    "E[{j}] = {p} is not unimodular (|ξ| = {})",
                    p.norm()
                )));
            }
        }
        let set = Self { points };
        let d = set.min_pairwise_distance();
        if d <= DISTINCT_TOL {
            return Err(Error::InvalidInput(format!(
                "points of E must be distinct (minimum pairwise distance {d:.3e})"
            )));
        }
        Ok(set)
    }

    /// Points `e^{iθ}` for the given angles (radians).
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&t| C64::from_polar(1.0, t)).collect())
    }

    /// `N`-th roots of unity rotated by `offset`.
    pub fn roots_of_unity(n: usize, offset: f64) -> Result<Self> {
        let angles: Vec<f64> = (0..n).map(|k| offset + TAU * k as f64 / n as f64).collect();
        Self::from_angles(&angles)
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `{ξ̄_1, …, ξ̄_N}`, the peripheral set relevant for the adjoint.
    pub fn conj(&self) -> Self {
        Self {
            points: self.points.iter().map(|z| z.conj()).collect(),
        }
    }

    /// `{ωξ_1, …, ωξ_N}` for unimodular `ω`.
    pub fn rotated(&self, omega: C64) -> Self {
        Self {
            points: self.points.iter().map(|z| z * omega / omega.norm()).collect(),
        }
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    /// `min_j |z − ξ_j|`.
    pub fn distance_to(&self, z: C64) -> f64 {
        self.points
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `∏_j |ξ_j − z|`.
    pub fn product_distance(&self, z: C64) -> f64 {
        self.points.iter().map(|p| (p - z).norm()).product()
    }

    /// Index of the point within `tol` of `z`, if any.
    pub fn index_of(&self, z: C64, tol: f64) -> Option<usize> {
        self.points.iter().position(|p| (p - z).norm() <= tol)
    }
}

impl<'de> Deserialize<'de> for PointSetE {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            points: Vec<C64>,
        }
        let raw = Raw::deserialize(d)?;
        PointSetE::new(raw.points).map_err(serde::de::Error::custom)
    }
}

/// One piece of a closed contour: a segment `a → b` or a counter-clockwise
/// arc `center + radius·e^{iθ}`, `θ ∈ [theta_start, theta_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Segment {
        a: C64,
        b: C64,
    },
    Arc {
        center: C64,
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
}

impl Piece {
    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }

    /// Point at parameter `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { a, b } => a + (b - a) * t,
            Piece::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => center + C64::from_polar(radius, theta_start + (theta_end - theta_start) * t),
        }
    }

    /// `dz/dt` at parameter `t`.
    pub fn derivative(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { a, b } => b - a,
            Piece::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => {
                let span = theta_end - theta_start;
                let th = theta_start + span * t;
                c(0.0, 1.0) * C64::from_polar(radius, th) * span
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { a, b } => (b - a).norm(),
            Piece::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => radius * (theta_end - theta_start).abs(),
        }
    }

    /// Contribution `½∮(x dy − y dx)` of this piece to the enclosed area.
    fn area_term(&self) -> f64 {
        match *self {
            Piece::Segment { a, b } => 0.5 * (a.re * b.im - a.im * b.re),
            Piece::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let (s0, c0) = theta_start.sin_cos();
                let (s1, c1) = theta_end.sin_cos();
                0.5 * (radius * radius * (theta_end - theta_start)
                    + radius * (center.re * (s1 - s0) + center.im * (c1 - c0)))
            }
        }
    }

    fn distance(&self, p: C64) -> f64 {
        match *self {
            Piece::Segment { a, b } => {
                let d = b - a;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (p - a).norm();
                }
                let t = ((p - a) * d.conj()).re / len2;
                (p - (a + d * t.clamp(0.0, 1.0))).norm()
            }
            Piece::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let w = p - center;
                if angle_in_range(w.arg(), theta_start, theta_end) {
                    (w.norm() - radius).abs()
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }

    /// Largest value of the supporting functional of this piece at `p`:
    /// positive means `p` is on the outer side.
    fn support_excess(&self, p: C64) -> f64 {
        match *self {
            Piece::Segment { a, b } => {
                // Right of a → b (outside for positive orientation) is positive.
                let d = b - a;
                -((p - a) * d.conj()).im / d.norm().max(f64::MIN_POSITIVE)
            }
            Piece::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let w = p - center;
                let rho = w.norm();
                let best = if rho == 0.0 {
                    0.0
                } else if angle_in_range(w.arg(), theta_start, theta_end) {
                    rho
                } else {
                    let phi = w.arg();
                    rho * (phi - theta_start)
                        .cos()
                        .max((phi - theta_end).cos())
                };
                best - radius
            }
        }
    }
}

/// Whether angle `phi` lies in the counter-clockwise range `[start, end]`.
fn angle_in_range(phi: f64, start: f64, end: f64) -> bool {
    let span = end - start;
    if span >= TAU {
        return true;
    }
    let rel = (phi - start).rem_euclid(TAU);
    rel <= span
}

/// Closed, simple, positively oriented convex contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRegion {
    pub pieces: Vec<Piece>,
    pub positively_oriented: bool,
}

impl ContourRegion {
    /// Validates that consecutive pieces chain and the curve closes.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::DegenerateRegion("contour has no pieces".into()));
        }
        for k in 0..pieces.len() {
            let next = &pieces[(k + 1) % pieces.len()];
            let gap = (pieces[k].end() - next.start()).norm();
            if gap > CHAIN_TOL * 10.0 {
                return Err(Error::DegenerateRegion(format!(
                    "piece {k} ends {gap:.3e} away from the start of the next piece"
                )));
            }
        }
        let region = Self {
            pieces,
            positively_oriented: true,
        };
        if region.area() <= 0.0 {
            return Err(Error::DegenerateRegion(
                "contour is not positively oriented".into(),
            ));
        }
        Ok(region)
    }

    /// Polygon through the given vertices (counter-clockwise).
    pub fn polygon(vertices: &[C64]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::DegenerateRegion("polygon needs three vertices".into()));
        }
        Self::new(
            (0..n)
                .map(|k| Piece::Segment {
                    a: vertices[k],
                    b: vertices[(k + 1) % n],
                })
                .collect(),
        )
    }

    /// Vertices at the start of every piece.
    pub fn vertices(&self) -> Vec<C64> {
        self.pieces.iter().map(Piece::start).collect()
    }

    pub fn is_polygon(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| matches!(p, Piece::Segment { .. }))
    }

    /// Signed area enclosed by the contour.
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(Piece::area_term).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    /// Largest supporting-functional excess; negative inside, positive outside.
    pub fn support_excess(&self, p: C64) -> f64 {
        self.pieces
            .iter()
            .map(|piece| piece.support_excess(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Open interior membership.
    pub fn contains(&self, p: C64) -> bool {
        self.support_excess(p) < 0.0
    }

    /// Membership in the closure, up to `tol`.
    pub fn contains_closed(&self, p: C64, tol: f64) -> bool {
        self.support_excess(p) <= tol
    }

    pub fn distance_to_boundary(&self, p: C64) -> f64 {
        self.pieces
            .iter()
            .map(|piece| piece.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// `per_piece` midpoint samples on every piece.
    pub fn sample_boundary(&self, per_piece: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(per_piece * self.pieces.len());
        for piece in &self.pieces {
            for i in 0..per_piece {
                out.push(piece.point((i as f64 + 0.5) / per_piece as f64));
            }
        }
        out
    }

    /// `per_piece` equispaced samples on every piece, starting at the piece's
    /// first endpoint, so every vertex is included.
    pub fn sample_boundary_with_vertices(&self, per_piece: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(per_piece * self.pieces.len());
        for piece in &self.pieces {
            for i in 0..per_piece {
                out.push(piece.point(i as f64 / per_piece as f64));
            }
        }
        out
    }

    /// Convexity test on the polygonal vertices: all turns share one sign.
    pub fn is_convex_polygon(&self) -> bool {
        let v = self.vertices();
        let n = v.len();
        (0..n).all(|k| {
            let e1 = v[(k + 1) % n] - v[k];
            let e2 = v[(k + 2) % n] - v[(k + 1) % n];
            (e1.conj() * e2).im >= -1e-14
        })
    }

    /// Uniform samples from the interior, by rejection from the bounding box.
    pub fn sample_interior<R: rand::Rng>(&self, rng: &mut R, count: usize) -> Vec<C64> {
        let pts = self.sample_boundary(64);
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &pts {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y0 = y0.min(p.im);
            y1 = y1.max(p.im);
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let z = c(rng.random_range(x0..=x1), rng.random_range(y0..=y1));
            if self.contains(z) {
                out.push(z);
            }
        }
        out
    }
}

/// Boundary of `E_r`, the interior of the convex hull of `E ∪ {|z| ≤ r}`:
/// arcs of radius `r` joined by tangent segments through each `ξ_j` (or a
/// chord between neighbouring points when their angular gap is at most
/// `2·arccos r`).
pub fn build_er(e: &PointSetE, r: f64) -> Result<ContourRegion> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidInput(format!("r = {r} must lie in (0, 1)")));
    }
    if r < 1e-8 {
        return Err(Error::DegenerateRegion(format!(
            "r = {r:.3e} is too small for a stable tangent construction"
        )));
    }
    let alpha = r.acos();
    let mut angles: Vec<f64> = e.points().iter().map(|z| z.arg()).collect();
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mut pieces = Vec::new();
    for j in 0..n {
        let phi = angles[j];
        let gap = if n == 1 {
            TAU
        } else {
            (angles[(j + 1) % n] - phi).rem_euclid(TAU)
        };
        let next = phi + gap;
        let xi = C64::from_polar(1.0, phi);
        let xi_next = C64::from_polar(1.0, next);
        let span = gap - 2.0 * alpha;
        if span > 1e-12 {
            let t0 = phi + alpha;
            let t1 = t0 + span;
            pieces.push(Piece::Segment {
                a: xi,
                b: C64::from_polar(r, t0),
            });
            pieces.push(Piece::Arc {
                center: c(0.0, 0.0),
                radius: r,
                theta_start: t0,
                theta_end: t1,
            });
            pieces.push(Piece::Segment {
                a: C64::from_polar(r, t1),
                b: xi_next,
            });
        } else {
            pieces.push(Piece::Segment { a: xi, b: xi_next });
        }
    }
    ContourRegion::new(pieces)
}

/// Convex polygon `Δ` with `E_r ⊂ Δ ⊂ 𝔻` and `Δ̄ ∩ 𝕋 = E`: each arc of
/// `∂E_r` is replaced by a circumscribed polyline whose vertices stay below
/// modulus `(1 + r)/2`.
pub fn enclosing_polygon(e: &PointSetE, r: f64) -> Result<ContourRegion> {
    let er = build_er(e, r)?;
    let outer = ((1.0 + r) / 2.0).min(1.0 - 2e-6);
    if outer <= r {
        return Err(Error::DegenerateRegion(format!(
            "r = {r} leaves no room for a polygon strictly inside the disc"
        )));
    }
    let max_step = 2.0 * (r / outer).acos();
    let mut vertices = Vec::new();
    for piece in &er.pieces {
        match *piece {
            Piece::Segment { a, .. } => {
                // Segment starts are either ξ_j or arc tangent points; the
                // latter are collinear with the neighbouring polygon edges.
                if (a.norm() - 1.0).abs() <= UNIMODULAR_TOL * 10.0 {
                    vertices.push(a);
                }
            }
            Piece::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => {
                let span = theta_end - theta_start;
                let k = (span / max_step).ceil().max(1.0) as usize;
                let h = span / k as f64;
                let rho = radius / (h / 2.0).cos();
                for i in 0..k {
                    vertices.push(C64::from_polar(rho, theta_start + (i as f64 + 0.5) * h));
                }
            }
        }
    }
    if vertices.len() < 3 {
        // Two antipodal-free points joined by chords only, or a single
        // point: pad with the disc's circumscribed vertices.
        return Err(Error::DegenerateRegion(
            "polygon has fewer than three vertices".into(),
        ));
    }
    ContourRegion::polygon(&vertices)
}

/// Sampling grid for [`classify_ritt`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Log-spaced radii `1 + δ`, `δ ∈ [min_radial_offset, 1]`.
    pub radii: usize,
    pub angles: usize,
    /// Radial approach points per peripheral point (and per eigenvalue
    /// direction of modulus above one half).
    pub approach_points: usize,
    /// Closest radial approach `|z − ξ|`.
    pub approach_min: f64,
    pub min_radial_offset: f64,
    /// Local pattern-search refinement around the largest samples.
    pub refine: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radii: 64,
            angles: 256,
            approach_points: 32,
            approach_min: 1e-6,
            min_radial_offset: 1e-3,
            refine: true,
        }
    }
}

impl GridSpec {
    /// Coarser companion grid used for the refinement-stability test.
    pub fn coarsened(&self) -> Self {
        Self {
            radii: (self.radii / 2).max(2),
            angles: (self.angles / 2).max(4),
            approach_points: (self.approach_points / 2).max(2),
            approach_min: (self.approach_min * 100.0).min(0.1),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub z: C64,
    pub resolvent_norm: f64,
    pub distance_to_e: f64,
}

impl ResolventSample {
    pub fn weighted(&self) -> f64 {
        self.resolvent_norm * self.distance_to_e
    }
}

/// Numerical evidence for the Ritt_E resolvent bound
/// `‖R(z,T)‖ ≤ M·max_j |z − ξ_j|^{-1}` outside the closed unit disc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RittCertificate {
    pub e: PointSetE,
    pub m_estimate: f64,
    /// Estimate from the coarser grid; the verdict compares the two.
    pub m_coarse: f64,
    /// Radius parameter of the region the certificate is attached to.
    pub r: f64,
    pub spectral_radius: f64,
    /// Closest radial approach used for the samples.
    pub approach_distance: f64,
    pub samples: Vec<ResolventSample>,
    pub verdict: Verdict,
}

impl RittCertificate {
    /// Writes `(Re z, Im z, resolvent_norm, weighted_value)` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_z,im_z,resolvent_norm,weighted_value")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                s.z.re,
                s.z.im,
                s.resolvent_norm,
                s.weighted()
            )?;
        }
        Ok(())
    }
}

fn weighted_value(res: &Resolvent, e: &PointSetE, z: C64) -> ResolventSample {
    let norm = res.norm_at(z).unwrap_or(f64::INFINITY);
    ResolventSample {
        z,
        resolvent_norm: norm,
        distance_to_e: e.distance_to(z),
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn grid_points(grid: &GridSpec, e: &PointSetE, spectrum: &[C64]) -> Vec<C64> {
    let mut pts = Vec::new();
    for delta in log_spaced(grid.min_radial_offset, 1.0, grid.radii) {
        for k in 0..grid.angles {
            pts.push(C64::from_polar(1.0 + delta, TAU * k as f64 / grid.angles as f64));
        }
    }
    let mut directions: Vec<C64> = e.points().to_vec();
    for l in spectrum {
        if l.norm() > 0.5 && e.distance_to(*l / l.norm()) > 1e-9 {
            directions.push(*l / l.norm());
        }
    }
    for u in directions {
        for delta in log_spaced(grid.approach_min, 1.0, grid.approach_points) {
            pts.push(u * (1.0 + delta));
        }
    }
    pts
}

/// Pattern search in `(θ, log δ)` around a sample, staying in `1 < |z| ≤ 2`.
fn refine_peak(res: &Resolvent, e: &PointSetE, grid: &GridSpec, start: C64) -> ResolventSample {
    let eval = |theta: f64, log_delta: f64| {
        let z = C64::from_polar(1.0 + log_delta.exp(), theta);
        weighted_value(res, e, z)
    };
    let lo = grid.approach_min.ln();
    let mut theta = start.arg();
    let mut ld = (start.norm() - 1.0).max(grid.approach_min).ln();
    let mut best = eval(theta, ld);
    let mut step_t = TAU / grid.angles as f64;
    let mut step_d = (1.0 / grid.min_radial_offset).ln() / grid.radii as f64;
    for _ in 0..60 {
        let mut improved = false;
        for (dt, dd) in [(step_t, 0.0), (-step_t, 0.0), (0.0, step_d), (0.0, -step_d)] {
            let nd = (ld + dd).clamp(lo, 0.0);
            let cand = eval(theta + dt, nd);
            if cand.weighted() > best.weighted() {
                best = cand;
                theta += dt;
                ld = nd;
                improved = true;
            }
        }
        if !improved {
            step_t *= 0.5;
            step_d *= 0.5;
            if step_t < 1e-10 && step_d < 1e-10 {
                break;
            }
        }
    }
    best
}

fn sweep(res: &Resolvent, e: &PointSetE, grid: &GridSpec) -> (f64, Vec<ResolventSample>) {
    let pts = grid_points(grid, e, &res.spectrum());
    let samples: Vec<ResolventSample> = pts
        .par_iter()
        .map(|&z| weighted_value(res, e, z))
        .collect();
    let mut m = samples
        .iter()
        .map(ResolventSample::weighted)
        .fold(0.0, f64::max);
    let mut all = samples;
    if grid.refine && m.is_finite() {
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by(|&a, &b| all[b].weighted().total_cmp(&all[a].weighted()));
        let starts: Vec<C64> = order.iter().take(4).map(|&i| all[i].z).collect();
        let refined: Vec<ResolventSample> = starts
            .par_iter()
            .map(|&z| refine_peak(res, e, grid, z))
            .collect();
        for s in refined {
            m = m.max(s.weighted());
            all.push(s);
        }
    }
    (m, all)
}

/// Samples `‖R(z,T)‖·min_j|z − ξ_j|` on `1 < |z| ≤ 2` at two grid
/// resolutions and issues a verdict:
/// * `Fail` when an eigenvalue has modulus above `1 + 1e-10` or the estimate
///   more than doubles under refinement;
/// * `Pass` when the spectrum lies in the closed disc and the estimate grows
///   by less than 5% under refinement;
/// * `Inconclusive` otherwise.
pub fn classify_ritt(t: &CMatrix, e: &PointSetE, grid: &GridSpec) -> RittCertificate {
    classify_ritt_with_r(t, e, grid, 0.5)
}

pub fn classify_ritt_with_r(t: &CMatrix, e: &PointSetE, grid: &GridSpec, r: f64) -> RittCertificate {
    let res = Resolvent::new(t);
    let rho = res
        .spectrum()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let (m_coarse, _) = sweep(&res, e, &grid.coarsened());
    let (m_fine, samples) = sweep(&res, e, grid);
    let verdict = if rho > 1.0 + 1e-10 || !m_fine.is_finite() {
        Verdict::Fail
    } else {
        let growth = m_fine / m_coarse.max(f64::MIN_POSITIVE);
        if growth <= 1.05 {
            Verdict::Pass
        } else if growth > 2.0 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    };
    RittCertificate {
        e: e.clone(),
        m_estimate: m_fine,
        m_coarse,
        r,
        spectral_radius: rho,
        approach_distance: grid.approach_min,
        samples,
        verdict,
    }
}

/// Checks `σ(T) ⊂ E_r ∪ E`.
pub fn check_spectrum_in_region(
    t: &CMatrix,
    e: &PointSetE,
    region: &ContourRegion,
) -> Result<()> {
    for l in Resolvent::new(t).spectrum() {
        if e.distance_to(l) <= 1e-8 || region.contains(l) {
            continue;
        }
        return Err(Error::SpectrumOutside {
            point: format!("{l}"),
        });
    }
    Ok(())
}

/// `sup_{z ∈ ∂E_r \ E} ∏_j|ξ_j − z|·‖R(z,T)‖`, sampled at `nodes` midpoints
/// per boundary piece, skipping `1e-6`-neighbourhoods of `E`.
pub fn verify_peripheral_bound(t: &CMatrix, e: &PointSetE, r: f64, nodes: usize) -> Result<f64> {
    let region = build_er(e, r)?;
    check_spectrum_in_region(t, e, &region)?;
    let res = Resolvent::new(t);
    let pts: Vec<C64> = region
        .sample_boundary(nodes)
        .into_iter()
        .filter(|&z| e.distance_to(z) >= 1e-6)
        .collect();
    let values: Vec<f64> = pts
        .par_iter()
        .map(|&z| {
            res.norm_at(z)
                .map(|n| n * e.product_distance(z))
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Numerical sector angle of `I − ξ̄T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorCheck {
    /// `max |arg λ|` over eigenvalues `λ` of `I − ξ̄T`, ignoring `|λ| < 1e-12`.
    pub angle: f64,
    pub sectorial: bool,
}

pub fn check_sectorial(t: &CMatrix, xi: C64) -> SectorCheck {
    let n = t.nrows();
    let shifted = identity(n) - t * xi.conj();
    let angle = crate::numerics::spectrum(&shifted)
        .iter()
        .filter(|l| l.norm() >= 1e-12)
        .map(|l| l.arg().abs())
        .fold(0.0, f64::max);
    SectorCheck {
        angle,
        sectorial: angle < PI / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{real_diag, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e1() -> PointSetE {
        PointSetE::new(vec![ONE]).unwrap()
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSetE::new(vec![]).is_err());
        let err = PointSetE::new(vec![ONE, c(0.5, 0.0)]).unwrap_err();
        assert!(format!("{err}").contains("E[1]"));
        assert!(PointSetE::new(vec![ONE, ONE]).is_err());
        let e = PointSetE::from_angles(&[0.0, PI]).unwrap();
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn er_single_point_tangents() {
        let region = build_er(&e1(), 0.5).unwrap();
        assert_eq!(region.pieces.len(), 3);
        let alpha = 0.5f64.acos();
        let expected = [C64::from_polar(0.5, alpha), C64::from_polar(0.5, -alpha)];
        let starts = region.vertices();
        for t in expected {
            assert!(
                starts.iter().any(|v| (v - t).norm() < 1e-12)
                    || region.pieces.iter().any(|p| (p.end() - t).norm() < 1e-12),
                "missing tangent point {t}"
            );
        }
        // Tangency: the segment from 1 to the tangent point is orthogonal to the radius.
        if let Piece::Segment { a, b } = region.pieces[0] {
            assert!(((b - a).conj() * b).re.abs() < 1e-12);
        } else {
            panic!("first piece should be a segment");
        }
    }

    #[test]
    fn er_area_approaches_disc() {
        let e = PointSetE::from_angles(&[0.0, PI]).unwrap();
        let area = build_er(&e, 0.99).unwrap().area();
        assert!((area - PI).abs() / PI < 0.02, "area {area}");
    }

    #[test]
    fn origin_is_inside_every_er() {
        for angles in [vec![0.0], vec![0.3, 2.0, 4.0], vec![0.0, 0.1]] {
            let e = PointSetE::from_angles(&angles).unwrap();
            for r in [0.05, 0.5, 0.95] {
                assert!(build_er(&e, r).unwrap().contains(c(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn er_rejects_degenerate_r() {
        assert!(matches!(build_er(&e1(), 1e-9), Err(Error::DegenerateRegion(_))));
        assert!(build_er(&e1(), 1.0).is_err());
    }

    #[test]
    fn polygon_encloses_er() {
        let e = PointSetE::from_angles(&[0.0, 2.0]).unwrap();
        let r = 0.5;
        let poly = enclosing_polygon(&e, r).unwrap();
        assert!(poly.is_polygon() && poly.is_convex_polygon());
        let er = build_er(&e, r).unwrap();
        for z in er.sample_boundary(200) {
            assert!(poly.contains_closed(z, 1e-12));
        }
        let unimodular: Vec<C64> = poly
            .vertices()
            .into_iter()
            .filter(|v| v.norm() >= 1.0 - 1e-6)
            .collect();
        assert_eq!(unimodular.len(), 2);
    }

    #[test]
    fn single_point_polygon_only_touches_one() {
        let poly = enclosing_polygon(&e1(), 0.5).unwrap();
        let touching: Vec<C64> = poly
            .vertices()
            .into_iter()
            .filter(|v| v.norm() >= 1.0 - 1e-6)
            .collect();
        assert_eq!(touching.len(), 1);
        assert!((touching[0] - ONE).norm() < 1e-12);
    }

    #[test]
    fn er_monotone_in_r() {
        let e = PointSetE::from_angles(&[0.4, 3.0]).unwrap();
        let small = build_er(&e, 0.3).unwrap();
        let big = build_er(&e, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for z in small.sample_interior(&mut rng, 1000) {
            assert!(big.contains(z));
        }
    }

    fn light_grid() -> GridSpec {
        GridSpec {
            radii: 16,
            angles: 64,
            approach_points: 16,
            ..GridSpec::default()
        }
    }

    #[test]
    fn scalar_peripheral_resolvent_is_exact() {
        let cert = classify_ritt(&real_diag(&[1.0]), &e1(), &light_grid());
        assert!((cert.m_estimate - 1.0).abs() < 1e-9, "{}", cert.m_estimate);
        assert_eq!(cert.verdict, Verdict::Pass);
    }

    #[test]
    fn off_e_unimodular_eigenvalue_fails() {
        let t = identity(1) * C64::from_polar(1.0, PI / 3.0);
        let cert = classify_ritt(&t, &e1(), &light_grid());
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn interior_spectrum_passes() {
        let t = identity(2) * c(0.5, 0.0);
        let e = PointSetE::from_angles(&[1.0, 2.5]).unwrap();
        let cert = classify_ritt(&t, &e, &light_grid());
        assert_eq!(cert.verdict, Verdict::Pass);
        assert!(cert.m_estimate.is_finite());
    }

    #[test]
    fn expanding_spectrum_fails() {
        let cert = classify_ritt(&real_diag(&[1.2]), &e1(), &light_grid());
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn peripheral_bound_examples() {
        let v = verify_peripheral_bound(&real_diag(&[0.0]), &e1(), 0.5, 64).unwrap();
        let region = build_er(&e1(), 0.5).unwrap();
        let sup = region
            .sample_boundary(64)
            .iter()
            .map(|z| (ONE - z).norm())
            .fold(0.0, f64::max);
        assert!(v.is_finite() && v <= 2.0 * sup);
        let v = verify_peripheral_bound(&real_diag(&[1.0]), &e1(), 0.5, 64).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(matches!(
            verify_peripheral_bound(&crate::numerics::diag(&[c(0.0, 0.9)]), &e1(), 0.1, 16),
            Err(Error::SpectrumOutside { .. })
        ));
    }

    #[test]
    fn sectorial_examples() {
        let s = check_sectorial(&real_diag(&[1.0]), ONE);
        assert_eq!(s.angle, 0.0);
        assert!(s.sectorial);
        let s = check_sectorial(&(identity(2) * c(0.5, 0.0)), ONE);
        assert!(s.angle.abs() < 1e-15 && s.sectorial);
        let s = check_sectorial(&crate::numerics::diag(&[c(0.0, 0.9)]), ONE);
        assert!((s.angle - 0.9f64.atan()).abs() < 1e-12);
        assert!((s.angle - 0.7328).abs() < 1e-4 && s.sectorial);
    }

    #[test]
    fn region_json_is_piece_tagged() {
        let region = build_er(&e1(), 0.5).unwrap();
        let s = serde_json::to_string(&region).unwrap();
        assert!(s.contains("\"kind\":\"arc\"") && s.contains("\"kind\":\"segment\""));
        let back: ContourRegion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, region);
    }
}
