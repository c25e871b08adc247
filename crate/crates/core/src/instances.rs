//! Seeded instance generators: Ritt_E matrices with prescribed peripheral
//! spectrum and commuting tuples sharing one similarity.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, stream)`, so trials can run in any order and still reproduce.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, diag, identity, CMatrix, CVector, C64};
use crate::polygonal::{build_er, classify_ritt, ContourRegion, GridSpec, PointSetE, Verdict};

/// Interior eigenvalues keep at least this distance from `E`.
pub const INTERIOR_MARGIN: f64 = 0.05;
/// Fraction of `r` used for the interior region `Ē_{0.95r}`.
pub const INTERIOR_SHRINK: f64 = 0.95;
const MAX_ATTEMPTS: u64 = 32;

/// RNG for stream `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for a sub-experiment, derived by drawing from a dedicated stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).random()
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) / 2f64.sqrt()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| complex_gaussian(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / C64::from(norm);
        }
    }
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase-fixed `R`).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = qr.unpack();
    let phases: Vec<C64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::from(1.0)
            }
        })
        .collect();
    q * diag(&phases)
}

/// `U·diag(s)·W*` with `log s_i` uniform in `[0, log cond_cap]`.
pub fn random_similarity<R: Rng>(rng: &mut R, n: usize, cond_cap: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    if cond_cap <= 1.0 {
        return u;
    }
    let w = random_unitary(rng, n);
    let span = cond_cap.ln();
    let s: Vec<C64> = (0..n)
        .map(|_| C64::from((rng.random::<f64>() * span).exp()))
        .collect();
    u * diag(&s) * w.adjoint()
}

/// Uniform point of `region` at distance at least `margin` from `E`.
pub fn sample_region<R: Rng>(rng: &mut R, region: &ContourRegion, e: &PointSetE, margin: f64) -> C64 {
    loop {
        let z = c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        if region.contains(z) && e.distance_to(z) >= margin {
            return z;
        }
    }
}

/// Uniform point of the closed disc of the given radius.
pub fn sample_disc<R: Rng>(rng: &mut R, radius: f64) -> C64 {
    C64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Spectrum for a Ritt_E matrix: `peripheral_count` distinct points of `E`
/// followed by interior points of `Ē_{0.95r}`.
fn ritt_spectrum<R: Rng>(
    rng: &mut R,
    e: &PointSetE,
    region: &ContourRegion,
    dim: usize,
    peripheral_count: usize,
) -> Vec<C64> {
    let mut idx: Vec<usize> = (0..e.len()).collect();
    idx.shuffle(rng);
    let mut lambda: Vec<C64> = idx[..peripheral_count]
        .iter()
        .map(|&j| e.points()[j])
        .collect();
    while lambda.len() < dim {
        lambda.push(sample_region(rng, region, e, INTERIOR_MARGIN));
    }
    lambda
}

/// Grid used for the generator post-check.
pub fn generator_grid() -> GridSpec {
    GridSpec {
        radii: 24,
        angles: 96,
        approach_points: 16,
        ..GridSpec::default()
    }
}

fn check_ritt_args(e: &PointSetE, r: f64, dim: usize, peripheral_count: usize, cond_cap: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("dim must be positive".into()));
    }
    if peripheral_count > dim.min(e.len()) {
        return Err(Error::InvalidInput(format!(
            "peripheral_count = {peripheral_count} exceeds min(dim, N) = {}",
            dim.min(e.len())
        )));
    }
    if cond_cap.is_nan() || cond_cap < 1.0 {
        return Err(Error::InvalidInput(format!("cond_cap = {cond_cap} must be at least 1")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidInput(format!("r = {r} must lie in (0, 1)")));
    }
    Ok(())
}

/// `T = S·diag(λ)·S^{-1}` with `peripheral_count` eigenvalues from `E`, the
/// rest in `Ē_{0.95r}` (away from `E` by [`INTERIOR_MARGIN`]), and
/// `cond(S) ≤ cond_cap`. Redrawn until [`classify_ritt`] passes.
pub fn gen_ritt_matrix(
    e: &PointSetE,
    r: f64,
    dim: usize,
    peripheral_count: usize,
    cond_cap: f64,
    seed: u64,
) -> Result<CMatrix> {
    check_ritt_args(e, r, dim, peripheral_count, cond_cap)?;
    let region = build_er(e, INTERIOR_SHRINK * r)?;
    let grid = generator_grid();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, attempt);
        let lambda = ritt_spectrum(&mut rng, e, &region, dim, peripheral_count);
        let s = random_similarity(&mut rng, dim, cond_cap);
        let Some(s_inv) = s.clone().try_inverse() else {
            continue;
        };
        let t = &s * diag(&lambda) * s_inv;
        if classify_ritt(&t, e, &grid).verdict == Verdict::Pass {
            return Ok(t);
        }
    }
    Err(Error::NotConverged {
        what: "Ritt matrix generator",
        achieved: f64::NAN,
        iterations: MAX_ATTEMPTS as usize,
    })
}

/// Eigenvalue recipe for [`gen_commuting_tuple`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleSpec {
    /// With `Some(E)`, every factor is Ritt_E: `peripheral_count` eigenvalues
    /// from `E` and the rest in `Ē_{0.95r}`. With `None`, eigenvalues are
    /// uniform in the disc of radius `radius`.
    pub e: Option<PointSetE>,
    pub r: f64,
    pub radius: f64,
    pub peripheral_count: usize,
    /// `1` gives diagonal factors; above one, a shared random similarity.
    pub cond_cap: f64,
}

impl Default for TupleSpec {
    fn default() -> Self {
        Self {
            e: None,
            r: 0.5,
            radius: 0.9,
            peripheral_count: 0,
            cond_cap: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedTuple {
    pub ops: Vec<CMatrix>,
    /// Shared similarity `S` with `T_k = S·diag(λ_k)·S^{-1}`.
    pub similarity: CMatrix,
    pub eigenvalues: Vec<Vec<C64>>,
}

/// Commuting `d`-tuple `T_k = S·diag(λ_k)·S^{-1}` with one shared `S`.
pub fn gen_commuting_tuple_detailed(d: usize, dim: usize, spec: &TupleSpec, seed: u64) -> Result<GeneratedTuple> {
    if d == 0 || dim == 0 {
        return Err(Error::InvalidInput("d and dim must be positive".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let region = match &spec.e {
        Some(e) => {
            check_ritt_args(e, spec.r, dim, spec.peripheral_count, spec.cond_cap)?;
            Some(build_er(e, INTERIOR_SHRINK * spec.r)?)
        }
        None => None,
    };
    let s = if spec.cond_cap <= 1.0 {
        identity(dim)
    } else {
        random_similarity(&mut rng, dim, spec.cond_cap)
    };
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let mut ops = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for _ in 0..d {
        let lambda = match (&spec.e, &region) {
            (Some(e), Some(reg)) => ritt_spectrum(&mut rng, e, reg, dim, spec.peripheral_count),
            _ => (0..dim).map(|_| sample_disc(&mut rng, spec.radius)).collect(),
        };
        ops.push(&s * diag(&lambda) * &s_inv);
        eigenvalues.push(lambda);
    }
    Ok(GeneratedTuple {
        ops,
        similarity: s,
        eigenvalues,
    })
}

pub fn gen_commuting_tuple(d: usize, dim: usize, spec: &TupleSpec, seed: u64) -> Result<Vec<CMatrix>> {
    gen_commuting_tuple_detailed(d, dim, spec, seed).map(|g| g.ops)
}

/// Commuting `d`-tuple shaped for joint dilation (`d ≥ 3`): the first
/// `d − 2` factors are Ritt_E with one eigenvalue from `E` (cycling through
/// its points) and the rest in the disc of radius `lead_radius`, the last two
/// have eigenvalues in the disc of radius `tail_radius`. All share one
/// similarity with `cond(S) ≤ cond_cap`.
///
/// Small `lead_radius` keeps the dilation windows of the leading factors
/// short, which is what lets the tensor space fit a dimension cap.
pub fn gen_dilation_tuple(
    d: usize,
    dim: usize,
    e: &PointSetE,
    lead_radius: f64,
    tail_radius: f64,
    cond_cap: f64,
    seed: u64,
) -> Result<GeneratedTuple> {
    if d < 3 || dim == 0 {
        return Err(Error::InvalidInput(format!("need d ≥ 3 and dim ≥ 1, got d = {d}, dim = {dim}")));
    }
    if !(0.0..1.0 - INTERIOR_MARGIN).contains(&lead_radius) || !(0.0..1.0).contains(&tail_radius) {
        return Err(Error::InvalidInput("radii must lie inside the unit disc".into()));
    }
    if cond_cap.is_nan() || cond_cap < 1.0 {
        return Err(Error::InvalidInput(format!("cond_cap = {cond_cap} must be at least 1")));
    }
    let mut rng = stream_rng(seed, 0);
    let s = random_similarity(&mut rng, dim, cond_cap);
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let mut ops = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for k in 0..d {
        let lambda: Vec<C64> = if k < d - 2 {
            let mut l = vec![e.points()[k % e.len()]];
            l.extend((1..dim).map(|_| sample_disc(&mut rng, lead_radius)));
            l
        } else {
            (0..dim).map(|_| sample_disc(&mut rng, tail_radius)).collect()
        };
        ops.push(&s * diag(&lambda) * &s_inv);
        eigenvalues.push(lambda);
    }
    Ok(GeneratedTuple {
        ops,
        similarity: s,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{commutator_norm, opnorm, singular_values, spectrum, ONE};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(5, 1).random();
        let b: u64 = stream_rng(5, 1).random();
        let c: u64 = stream_rng(5, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unitary_and_similarity() {
        let mut rng = stream_rng(1, 0);
        let u = random_unitary(&mut rng, 5);
        assert!(opnorm(&(u.adjoint() * &u - identity(5))) < 1e-13);
        let s = random_similarity(&mut rng, 6, 20.0);
        let sv = singular_values(&s);
        assert!(sv[0] / sv[5] <= 20.0 + 1e-9);
    }

    #[test]
    fn generator_examples() {
        let e = PointSetE::from_angles(&[0.0, 2.0]).unwrap();
        let t = gen_ritt_matrix(&e, 0.5, 4, 0, 1.0, 3).unwrap();
        assert!(opnorm(&(t.adjoint() * &t - &t * t.adjoint())) < 1e-12);
        assert!(spectrum(&t).iter().all(|l| l.norm() < 1.0));

        let t = gen_ritt_matrix(&e, 0.5, 1, 1, 1.0, 4).unwrap();
        assert!(e.index_of(t[(0, 0)], 1e-14).is_some());

        assert!(gen_ritt_matrix(&e, 0.5, 2, 3, 1.0, 0).is_err());
    }

    #[test]
    fn tuples_commute() {
        let spec = TupleSpec {
            cond_cap: 10.0,
            ..TupleSpec::default()
        };
        let ops = gen_commuting_tuple(3, 5, &spec, 9).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(commutator_norm(&ops[i], &ops[j]) <= 1e-12);
            }
        }
        let spec = TupleSpec {
            e: Some(PointSetE::new(vec![ONE]).unwrap()),
            peripheral_count: 1,
            ..TupleSpec::default()
        };
        let g = gen_commuting_tuple_detailed(2, 3, &spec, 1).unwrap();
        assert!(g.eigenvalues.iter().all(|l| l.contains(&ONE)));
    }
}
