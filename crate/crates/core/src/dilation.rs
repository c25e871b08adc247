//! Unitary dilations `T^n = Q·V^n·J` at finite size.
//!
//! * [`specific_dilation`]: the peripheral/shift construction for Ritt_E
//!   operators, `V = D ⊕ V²` with the bilateral shift replaced by a circulant
//!   whose period is long enough that nothing wraps for the certified powers.
//! * [`schaffer_dilation`]: the classical construction for contractions on a
//!   cyclic block space.
//! * [`ando_dilation`]: pairs of commuting contractions.
//! * [`joint_dilation`]: tensor assembly of the above for commuting tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ergodic::{full_decomposition, ErgodicDecomposition};
use crate::numerics::{
    commutator_norm, hermitian_psd_sqrt, identity, null_space, opnorm, CMatrix, CVector, C64,
    DEFAULT_KRON_CAP, ONE,
};
use crate::polygonal::PointSetE;
use crate::squarefn::sectorial_factor;
use crate::taylor::TaylorCoeffs;

/// Tolerance on `‖T‖ ≤ 1` for contractions.
pub const CONTRACTION_TOL: f64 = 1e-12;
/// Tolerance on commutators of input tuples, relative to `max(1, ‖S‖‖T‖)`.
pub const COMMUTE_TOL: f64 = 1e-12;
/// Tolerance of the intertwining check `J_iT_j = (I ⊗ T_j)J_i`.
pub const INTERTWINE_TOL: f64 = 1e-8;

/// Unitary `D ⊕ C` on `ℂ^N ⊕ ℂ^P`: `D = diag(phases)` and `C` the circulant
/// shift `(Cy)_p = y_{(p + step) mod P}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialUnitary {
    pub phases: Vec<C64>,
    pub period: usize,
    pub step: usize,
}

impl MonomialUnitary {
    pub fn dim(&self) -> usize {
        self.phases.len() + self.period
    }

    /// `(target, phase)` of basis vector `i` under the `n`-th power.
    fn image(&self, i: usize, n: usize) -> (usize, C64) {
        let np = self.phases.len();
        if i < np {
            (i, self.phases[i].powu(n as u32))
        } else {
            let p = i - np;
            let shift = (n % self.period) * (self.step % self.period) % self.period;
            (np + (p + self.period - shift) % self.period, ONE)
        }
    }

    /// Dense matrix; intended for small periods only.
    pub fn to_dense(&self) -> CMatrix {
        let k = self.dim();
        let mut m = CMatrix::zeros(k, k);
        for i in 0..k {
            let (t, ph) = self.image(i, 1);
            m[(t, i)] = ph;
        }
        m
    }

    /// Distance from unitarity: phase moduli and bijectivity of the index map.
    pub fn unitarity_defect(&self) -> f64 {
        let k = self.dim();
        let mut hit = vec![false; k];
        let mut defect = 0.0f64;
        for i in 0..k {
            let (t, ph) = self.image(i, 1);
            if hit[t] {
                return f64::INFINITY;
            }
            hit[t] = true;
            defect = defect.max((ph.norm() - 1.0).abs());
        }
        defect
    }
}

/// Operator on one tensor slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotOperator {
    Monomial(MonomialUnitary),
    Dense {
        #[serde(with = "crate::numerics::json")]
        matrix: CMatrix,
    },
}

impl SlotOperator {
    pub fn dim(&self) -> usize {
        match self {
            SlotOperator::Monomial(m) => m.dim(),
            SlotOperator::Dense { matrix } => matrix.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            SlotOperator::Monomial(m) => m.to_dense(),
            SlotOperator::Dense { matrix } => matrix.clone(),
        }
    }

    pub fn unitarity_defect(&self) -> f64 {
        match self {
            SlotOperator::Monomial(m) => m.unitarity_defect(),
            SlotOperator::Dense { matrix } => {
                opnorm(&(matrix.adjoint() * matrix - identity(matrix.nrows())))
            }
        }
    }

    /// Applies `(I_pre ⊗ F^power ⊗ I_post)` to the rows of `x`.
    pub fn apply_slot(&self, x: &CMatrix, pre: usize, post: usize, power: usize) -> CMatrix {
        let s = self.dim();
        debug_assert_eq!(x.nrows(), pre * s * post);
        match self {
            SlotOperator::Monomial(m) => {
                let mut out = CMatrix::zeros(x.nrows(), x.ncols());
                for i in 0..s {
                    let (t, ph) = m.image(i, power);
                    for a in 0..pre {
                        for b in 0..post {
                            let src = (a * s + i) * post + b;
                            let dst = (a * s + t) * post + b;
                            for col in 0..x.ncols() {
                                out[(dst, col)] = x[(src, col)] * ph;
                            }
                        }
                    }
                }
                out
            }
            SlotOperator::Dense { matrix } => {
                let mut f = identity(s);
                for _ in 0..power {
                    f = matrix * f;
                }
                let mut out = CMatrix::zeros(x.nrows(), x.ncols());
                for a in 0..pre {
                    for b in 0..post {
                        // Gather the slot fibre, multiply, scatter.
                        let rows: Vec<usize> = (0..s).map(|i| (a * s + i) * post + b).collect();
                        let fibre = CMatrix::from_fn(s, x.ncols(), |i, col| x[(rows[i], col)]);
                        let img = &f * fibre;
                        for (i, &r) in rows.iter().enumerate() {
                            for col in 0..x.ncols() {
                                out[(r, col)] = img[(i, col)];
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

/// Finite realization of `T^n = Q·V^n·J` on `K ⊗ H` (block index major).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedDilation {
    pub inner_dim: usize,
    /// Number of peripheral blocks `N` (zero for Schäffer dilations).
    pub n_peripheral: usize,
    /// Circulant period of the shift part, or the block count of a Schäffer
    /// space.
    pub period: usize,
    /// `Monomial` acts as `V ⊗ I_H`; `Dense` acts on the whole space.
    pub v: SlotOperator,
    #[serde(with = "crate::numerics::json::rect")]
    pub j: CMatrix,
    #[serde(with = "crate::numerics::json::rect")]
    pub q: CMatrix,
    /// Series truncation used in the `Q` weights.
    pub k_max: usize,
    /// Powers for which the identity is certified.
    pub n_max: usize,
    /// A priori bound on `max_{n ≤ n_max} ‖T^n − QV^nJ‖` from the series tail.
    pub truncation_bound: f64,
}

impl TruncatedDilation {
    pub fn space_dim(&self) -> usize {
        self.j.nrows()
    }

    /// `V^power·x` for `x` with rows indexed by the dilation space.
    pub fn apply_v(&self, x: &CMatrix, power: usize) -> CMatrix {
        match &self.v {
            SlotOperator::Monomial(_) => self.v.apply_slot(x, 1, self.inner_dim, power),
            SlotOperator::Dense { .. } => self.v.apply_slot(x, 1, 1, power),
        }
    }

    /// `‖T^n − QV^nJ‖` for `n = 0..=n_max`.
    pub fn errors(&self, t: &CMatrix, n_max: usize) -> Vec<f64> {
        let mut w = self.j.clone();
        let mut tn = identity(self.inner_dim);
        let mut out = Vec::with_capacity(n_max + 1);
        for _ in 0..=n_max {
            out.push(opnorm(&(&tn - &self.q * &w)));
            w = self.apply_v(&w, 1);
            tn = &tn * t;
        }
        out
    }

    /// `n × n` block of `J` at coordinate `index`.
    pub fn coordinate(&self, index: usize) -> CMatrix {
        let n = self.inner_dim;
        self.j.rows(index * n, n).into_owned()
    }

    pub fn coordinate_count(&self) -> usize {
        self.j.nrows() / self.inner_dim
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.v.unitarity_defect()
    }
}

/// `max_{0≤n≤n_max} ‖T^n − Q·V^n·J‖`.
pub fn dilation_check(dil: &TruncatedDilation, t: &CMatrix, n_max: usize) -> f64 {
    dil.errors(t, n_max).into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DilationOptions {
    /// Target for the dilation error; the series tail is kept below `tol/10`.
    pub tol: f64,
    /// Largest accepted series truncation.
    pub k_cap: usize,
    /// Longest Cesàro average for the ergodic projections.
    pub cesaro_length: usize,
    pub projection_tol: f64,
    /// Forces the series truncation instead of choosing it from `tol`.
    pub k_max: Option<usize>,
}

impl Default for DilationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            k_cap: 20_000,
            cesaro_length: 1 << 16,
            projection_tol: 1e-10,
            k_max: None,
        }
    }
}

/// Upper bound on `max_{n≤n_max} ‖T^n(S_k(T) − I)P‖`, using
/// `S_k(z) − 1 = Σ_{r=k+1}^{k+N} γ_{r,k} z^r` and Frobenius norms of `T^mP`.
struct TailEstimator<'a> {
    t: &'a CMatrix,
    power: CMatrix,
    norms: Vec<f64>,
}

impl<'a> TailEstimator<'a> {
    fn new(t: &'a CMatrix, p: &CMatrix) -> Self {
        Self {
            t,
            power: p.clone(),
            norms: vec![p.norm()],
        }
    }

    fn norm(&mut self, m: usize) -> f64 {
        while self.norms.len() <= m {
            self.power = self.t * &self.power;
            self.norms.push(self.power.norm());
        }
        self.norms[m]
    }

    fn bound(&mut self, coeffs: &TaylorCoeffs, k: usize, n_max: usize) -> f64 {
        let gammas = coeffs.gammas(k);
        let mut total = 0.0;
        for (i, g) in gammas.iter().enumerate() {
            let r = k + 1 + i;
            let worst = (0..=n_max).map(|n| self.norm(r + n)).fold(0.0, f64::max);
            total += g.norm() * worst;
        }
        total
    }
}

/// Dilation `T^n = Q(D ⊕ V²)^nJ` for a power-bounded Ritt_E matrix.
///
/// `J` sends `x` to its peripheral components `(x_1, …, x_N)` and to the
/// sequence with `T^kAx_{N+1}` at position `2k` and `T^{k+1}Ax_{N+1}` at
/// position `2k+1`; `Q = J̃*` where `J̃` is built the same way from the
/// decomposition of `T*` with weights `ā_m` (`ā_{2k}T^{*k}A*y_{N+1}` at
/// `2k`, `ā_{2k−1}T^{*(k−1)}A*y_{N+1}` at `2k−1`), cut after position
/// `2K_max + 1`. Positions beyond the stored window are zero, and the period
/// `2(n_max + K_max) + 4` keeps every used entry from wrapping.
pub fn specific_dilation(t: &CMatrix, e: &PointSetE, n_max: usize, tol: f64) -> Result<TruncatedDilation> {
    specific_dilation_with(
        t,
        e,
        n_max,
        &DilationOptions {
            tol,
            ..DilationOptions::default()
        },
    )
}

pub fn specific_dilation_with(
    t: &CMatrix,
    e: &PointSetE,
    n_max: usize,
    opts: &DilationOptions,
) -> Result<TruncatedDilation> {
    let dec = full_decomposition(t, e, opts.cesaro_length, opts.projection_tol)?;
    let t_adj = t.adjoint();
    let dec_adj = full_decomposition(&t_adj, &e.conj(), opts.cesaro_length, opts.projection_tol)?;
    specific_dilation_from_parts(t, e, n_max, opts, &dec, &dec_adj)
}

/// As [`specific_dilation_with`], reusing decompositions of `T` (for `E`)
/// and `T*` (for `Ē`).
pub fn specific_dilation_from_parts(
    t: &CMatrix,
    e: &PointSetE,
    n_max: usize,
    opts: &DilationOptions,
    dec: &ErgodicDecomposition,
    dec_adj: &ErgodicDecomposition,
) -> Result<TruncatedDilation> {
    let n = t.nrows();
    let big_n = e.len();
    let a = sectorial_factor(t, e)?;
    let a_adj = a.adjoint();
    let t_adj = t.adjoint();
    let p = &dec.range_projection;
    let p_adj = &dec_adj.range_projection;

    let mut coeffs = TaylorCoeffs::new(e, 64)?;
    let k_min = big_n.saturating_sub(1).div_ceil(2);
    let mut tail = TailEstimator::new(t, p);
    let (k_max, bound) = match opts.k_max {
        Some(k) => {
            let k = k.max(k_min);
            coeffs.extend(2 * k + 2);
            (k, tail.bound(&coeffs, 2 * k + 1, n_max))
        }
        None => {
            let mut k = k_min;
            loop {
                coeffs.extend(2 * k + 2);
                let b = tail.bound(&coeffs, 2 * k + 1, n_max);
                if b < opts.tol / 10.0 {
                    break (k, b);
                }
                if k >= opts.k_cap {
                    return Err(Error::NotConverged {
                        what: "dilation series tail",
                        achieved: b,
                        iterations: k,
                    });
                }
                k += 1;
            }
        }
    };

    let period = 2 * (n_max + k_max) + 4;
    let blocks = big_n + period;
    let mut j = CMatrix::zeros(blocks * n, n);
    let mut q = CMatrix::zeros(n, blocks * n);
    for (idx, (pj, pj_adj)) in dec.projections.iter().zip(&dec_adj.projections).enumerate() {
        j.view_mut((idx * n, 0), (n, n)).copy_from(pj);
        q.view_mut((0, idx * n), (n, n)).copy_from(&pj_adj.adjoint());
    }

    // T^k A P_{N+1}, k = 0..=K_max + n_max + 1.
    let mut tk_a_p = Vec::with_capacity(k_max + n_max + 2);
    let mut cur = &a * p;
    for _ in 0..k_max + n_max + 2 {
        let next = t * &cur;
        tk_a_p.push(cur);
        cur = next;
    }
    for k in 0..=k_max + n_max {
        let base = (big_n + 2 * k) * n;
        j.view_mut((base, 0), (n, n)).copy_from(&tk_a_p[k]);
        j.view_mut((base + n, 0), (n, n)).copy_from(&tk_a_p[k + 1]);
    }

    // J̃ coordinates T^{*k} A* P̃ with weights ā_p; Q takes their adjoints.
    let mut g = &a_adj * p_adj;
    for k in 0..=k_max {
        let even = 2 * k;
        let block = &g * coeffs.a_at(even).conj();
        q.view_mut((0, (big_n + even) * n), (n, n)).copy_from(&block.adjoint());
        let odd = 2 * k + 1;
        let next = &t_adj * &g;
        // Position 2k+1 = 2(k+1) − 1 carries ā_{2k+1}T^{*k}A*P̃.
        let block = &g * coeffs.a_at(odd).conj();
        q.view_mut((0, (big_n + odd) * n), (n, n)).copy_from(&block.adjoint());
        g = next;
    }

    Ok(TruncatedDilation {
        inner_dim: n,
        n_peripheral: big_n,
        period,
        v: SlotOperator::Monomial(MonomialUnitary {
            phases: e.points().to_vec(),
            period,
            step: 2,
        }),
        j,
        q,
        k_max,
        n_max,
        truncation_bound: bound,
    })
}

fn check_contraction(t: &CMatrix) -> Result<f64> {
    let norm = opnorm(t);
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::NotContraction(norm));
    }
    Ok(norm)
}

/// `(D_T, D_{T*})` from one SVD `T = UΣW*`, so that `T D_T = D_{T*} T`
/// holds to rounding even when `1 − σ²` is tiny; two separate square roots
/// would only agree to about `√ε` there.
fn defect_pair(t: &CMatrix) -> (CMatrix, CMatrix) {
    let svd = t.clone().svd(true, true);
    let (u, w_adj) = (svd.u.expect("requested U"), svd.v_t.expect("requested V*"));
    let d = CVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&s| {
            let s = s.min(1.0);
            C64::from(((1.0 - s) * (1.0 + s)).sqrt())
        }),
    );
    let diag = CMatrix::from_diagonal(&d);
    let d_t = w_adj.adjoint() * &diag * &w_adj;
    let d_ts = &u * &diag * u.adjoint();
    (d_t, d_ts)
}

/// Unitary on `B` cyclic blocks: the Julia block
/// `[[T, D_{T*}], [D_T, −T*]]` maps `(h_0, h_{B−1})` to `(out_0, out_1)`
/// and every other block moves one step, `h_k → out_{k+1}`.
pub fn schaffer_unitary(t: &CMatrix, blocks: usize) -> CMatrix {
    let n = t.nrows();
    let id = identity(n);
    let (d_t, d_ts) = defect_pair(t);
    let mut v = CMatrix::zeros(blocks * n, blocks * n);
    let last = blocks - 1;
    v.view_mut((0, 0), (n, n)).copy_from(t);
    v.view_mut((0, last * n), (n, n)).copy_from(&d_ts);
    v.view_mut((n, 0), (n, n)).copy_from(&d_t);
    v.view_mut((n, last * n), (n, n)).copy_from(&(-t.adjoint()));
    for k in 1..last {
        v.view_mut(((k + 1) * n, k * n), (n, n)).copy_from(&id);
    }
    v
}

/// Schäffer dilation on `2·window + 1` cyclic blocks with `J₀ = e_0 ⊗ I`
/// and `Q = J₀*`; the identity `J₀*V^nJ₀ = T^n` holds exactly for
/// `n ≤ 2·window` and is certified for `n ≤ window`.
pub fn schaffer_dilation(t: &CMatrix, window: usize) -> Result<TruncatedDilation> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be at least 1".into()));
    }
    check_contraction(t)?;
    let n = t.nrows();
    let blocks = 2 * window + 1;
    let v = schaffer_unitary(t, blocks);
    let mut j = CMatrix::zeros(blocks * n, n);
    j.view_mut((0, 0), (n, n)).copy_from(&identity(n));
    let q = j.adjoint();
    Ok(TruncatedDilation {
        inner_dim: n,
        n_peripheral: 0,
        period: blocks,
        v: SlotOperator::Dense { matrix: v },
        j,
        q,
        k_max: 0,
        n_max: window,
        truncation_bound: 0.0,
    })
}

/// One factor `U_k = I ⊗ … ⊗ F ⊗ … ⊗ I` acting on tensor slot `slot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFactor {
    pub slot: usize,
    pub op: SlotOperator,
}

/// Commuting operators `U_1, …, U_d` on `K_1 ⊗ … ⊗ K_m ⊗ L` with embeddings
/// `J`, `Q` such that `T_1^{n_1}⋯T_d^{n_d} = QU_1^{n_1}⋯U_d^{n_d}J`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointDilation {
    pub d: usize,
    pub m: usize,
    pub inner_dim: usize,
    /// `K_1, …, K_m, L`.
    pub slot_dims: Vec<usize>,
    pub unitaries: Vec<TensorFactor>,
    #[serde(with = "crate::numerics::json::rect")]
    pub j: CMatrix,
    #[serde(with = "crate::numerics::json::rect")]
    pub q: CMatrix,
    /// Identity certified for `n_1 + … + n_d ≤ budget`.
    pub budget: usize,
    /// Individual exponent limits.
    pub n_max: Vec<usize>,
    /// False when some factor is only a contraction (see `notes`).
    pub unitary: bool,
    pub notes: Vec<String>,
}

impl JointDilation {
    pub fn total_dim(&self) -> usize {
        self.slot_dims.iter().product()
    }

    fn slot_layout(&self, slot: usize) -> (usize, usize) {
        let pre = self.slot_dims[..slot].iter().product();
        let post = self.slot_dims[slot + 1..].iter().product();
        (pre, post)
    }

    /// `U_k^power·x`.
    pub fn apply(&self, k: usize, x: &CMatrix, power: usize) -> CMatrix {
        let f = &self.unitaries[k];
        let (pre, post) = self.slot_layout(f.slot);
        f.op.apply_slot(x, pre, post, power)
    }

    /// `‖J‖·‖Q‖`.
    pub fn norm_product(&self) -> f64 {
        opnorm(&self.j) * opnorm(&self.q)
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitaries
            .iter()
            .map(|f| f.op.unitarity_defect())
            .fold(0.0, f64::max)
    }

    /// Largest `‖U_iU_j − U_jU_i‖`; factors on different slots commute exactly.
    pub fn commutation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.unitaries.iter().enumerate() {
            for b in &self.unitaries[i + 1..] {
                if a.slot == b.slot {
                    worst = worst.max(commutator_norm(&a.op.to_dense(), &b.op.to_dense()));
                }
            }
        }
        worst
    }

    /// Dense `U_k`, refused above `cap`.
    pub fn dense_unitary(&self, k: usize, cap: usize) -> Result<CMatrix> {
        let dim = self.total_dim();
        if dim > cap {
            return Err(Error::DimensionOverflow { dim, cap });
        }
        Ok(self.apply(k, &identity(dim), 1))
    }

    /// All exponent tuples with `Σ n_k ≤ budget`, in lexicographic order.
    pub fn exponent_tuples(d: usize, budget: usize) -> Vec<Vec<usize>> {
        fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == d {
                out.push(cur.clone());
                return;
            }
            for n in 0..=left {
                cur.push(n);
                rec(d, left - n, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(d, budget, &mut Vec::new(), &mut out);
        out
    }

    /// `max ‖T_1^{n_1}⋯T_d^{n_d} − QU_1^{n_1}⋯U_d^{n_d}J‖` over `Σ n_k ≤ budget`.
    pub fn check(&self, t_list: &[CMatrix], budget: usize) -> f64 {
        self.check_detailed(t_list, budget)
            .into_iter()
            .map(|(_, e)| e)
            .fold(0.0, f64::max)
    }

    /// Errors per exponent tuple.
    pub fn check_detailed(&self, t_list: &[CMatrix], budget: usize) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let n = self.inner_dim;
        self.check_rec(
            t_list,
            self.d,
            budget,
            self.j.clone(),
            identity(n),
            &mut vec![0; self.d],
            &mut out,
        );
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn check_rec(
        &self,
        t_list: &[CMatrix],
        k: usize,
        left: usize,
        w: CMatrix,
        prod: CMatrix,
        exps: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if k == 0 {
            out.push((exps.clone(), opnorm(&(&prod - &self.q * &w))));
            return;
        }
        let idx = k - 1;
        let mut w = w;
        let mut prod = prod;
        for e in 0..=left {
            exps[idx] = e;
            self.check_rec(t_list, idx, left - e, w.clone(), prod.clone(), exps, out);
            if e < left {
                w = self.apply(idx, &w, 1);
                prod = &t_list[idx] * prod;
            }
        }
        exps[idx] = 0;
    }

    /// A single-operator dilation as a joint dilation (`d = 1`).
    pub fn from_truncated(dil: &TruncatedDilation) -> Self {
        let (slot_dims, m) = match &dil.v {
            SlotOperator::Monomial(mu) => (vec![mu.dim(), dil.inner_dim], 1),
            SlotOperator::Dense { matrix } => (vec![matrix.nrows()], 0),
        };
        JointDilation {
            d: 1,
            m,
            inner_dim: dil.inner_dim,
            slot_dims,
            unitaries: vec![TensorFactor {
                slot: 0,
                op: dil.v.clone(),
            }],
            j: dil.j.clone(),
            q: dil.q.clone(),
            budget: dil.n_max,
            n_max: vec![dil.n_max],
            unitary: true,
            notes: Vec::new(),
        }
    }

    /// Replaces `J` by `J·R` and `Q` by `L·Q`, as when dilating a similar tuple.
    pub fn conjugated(mut self, left: &CMatrix, right: &CMatrix) -> Self {
        self.j = &self.j * right;
        self.q = left * &self.q;
        self
    }
}

/// Pairwise commutators within `COMMUTE_TOL·max(1, ‖S‖‖T‖)`.
pub fn check_commuting(t_list: &[CMatrix]) -> Result<()> {
    for i in 0..t_list.len() {
        for k in i + 1..t_list.len() {
            let scale = (opnorm(&t_list[i]) * opnorm(&t_list[k])).max(1.0);
            let c = commutator_norm(&t_list[i], &t_list[k]);
            if c > COMMUTE_TOL * scale {
                return Err(Error::NotCommuting(c));
            }
        }
    }
    Ok(())
}

/// Unitary `G` on `ℂ^{rows}` with `G·X = Y`, given `X*X = Y*Y`.
fn unitary_mapping(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let rows = x.nrows();
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let scale = svd.singular_values.max().max(1.0);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * scale)
        .collect();
    let r = keep.len();
    let mut u = CMatrix::zeros(rows, r);
    let mut u2 = CMatrix::zeros(rows, r);
    for (col, &i) in keep.iter().enumerate() {
        let w = v_t.row(i).adjoint();
        let s = C64::from(svd.singular_values[i]);
        u.set_column(col, &((x * &w) / s));
        u2.set_column(col, &((y * &w) / s));
    }
    // Re-orthonormalize the image frame (polar factor) against rounding.
    if r > 0 {
        let p = u2.clone().svd(true, true);
        u2 = p.u.unwrap() * p.v_t.unwrap();
    }
    let comp = null_space(&u.adjoint(), 1e-10);
    let comp2 = null_space(&u2.adjoint(), 1e-10);
    let mut g = &u2 * u.adjoint();
    if comp.ncols() == comp2.ncols() && comp.ncols() > 0 {
        g += &comp2 * comp.adjoint();
    }
    g
}

/// Embeds `H` as block `(0, 0)` of a `B × B` grid of `H`-blocks and lets
/// the Schäffer unitaries of `T_1` and `T_2` act along the two axes.
fn ando_doubly_commuting(t1: &CMatrix, t2: &CMatrix, budget: usize) -> JointDilation {
    let n = t1.nrows();
    let mut b = (budget + 1).max(3);
    if b.is_multiple_of(2) {
        b += 1;
    }
    let s1 = schaffer_unitary(t1, b);
    let s2 = schaffer_unitary(t2, b);
    let l = b * b * n;
    let mut v1 = CMatrix::zeros(l, l);
    let mut v2 = CMatrix::zeros(l, l);
    for i in 0..b {
        for i2 in 0..b {
            let blk1 = s1.view((i2 * n, i * n), (n, n));
            let blk2 = s2.view((i2 * n, i * n), (n, n));
            for k in 0..b {
                // Axis 1: (i, k) → (i2, k); axis 2: (k, i) → (k, i2).
                v1.view_mut(((i2 * b + k) * n, (i * b + k) * n), (n, n))
                    .copy_from(&blk1);
                v2.view_mut(((k * b + i2) * n, (k * b + i) * n), (n, n))
                    .copy_from(&blk2);
            }
        }
    }
    let mut j = CMatrix::zeros(l, n);
    j.view_mut((0, 0), (n, n)).copy_from(&identity(n));
    let q = j.adjoint();
    JointDilation {
        d: 2,
        m: 0,
        inner_dim: n,
        slot_dims: vec![l],
        unitaries: vec![
            TensorFactor {
                slot: 0,
                op: SlotOperator::Dense { matrix: v1 },
            },
            TensorFactor {
                slot: 0,
                op: SlotOperator::Dense { matrix: v2 },
            },
        ],
        j,
        q,
        budget: b - 1,
        n_max: vec![b - 1, b - 1],
        unitary: true,
        notes: vec!["doubly commuting pair: product of Schäffer dilations".into()],
    }
}

/// Ando's commuting isometries compressed to finitely many positions.
///
/// On sequences `(h_0, h_1, …)` let `W_i(h) = (T_ih_0, D_ih_0, 0, h_1, h_2, …)`
/// and let `G` be a unitary on `H⁴` with
/// `G(D_1T_2h, 0, D_2h, 0) = (D_2T_1h, 0, D_1h, 0)`. With `G̃ = I ⊕ G ⊕ G ⊕ …`
/// on the blocks of positions `(1..4), (5..8), …`, the operators `G̃W_1` and
/// `W_2G̃*` are commuting isometries. Entries only move to later positions, so
/// compressing to the first positions keeps them commuting and keeps the
/// dilation identity; the compressions are contractions, not unitaries.
fn ando_general(t1: &CMatrix, t2: &CMatrix, budget: usize) -> JointDilation {
    let n = t1.nrows();
    let id = identity(n);
    let d1 = hermitian_psd_sqrt(&(&id - t1.adjoint() * t1));
    let d2 = hermitian_psd_sqrt(&(&id - t2.adjoint() * t2));
    let mut x = CMatrix::zeros(4 * n, n);
    let mut y = CMatrix::zeros(4 * n, n);
    x.view_mut((0, 0), (n, n)).copy_from(&(&d1 * t2));
    x.view_mut((2 * n, 0), (n, n)).copy_from(&d2);
    y.view_mut((0, 0), (n, n)).copy_from(&(&d2 * t1));
    y.view_mut((2 * n, 0), (n, n)).copy_from(&d1);
    let g = unitary_mapping(&x, &y);

    let groups = budget / 2 + 2;
    let positions = 1 + 4 * groups;
    let l = positions * n;
    let shift = |t: &CMatrix, d: &CMatrix| {
        let mut w = CMatrix::zeros(l, l);
        w.view_mut((0, 0), (n, n)).copy_from(t);
        w.view_mut((n, 0), (n, n)).copy_from(d);
        for p in 1..positions {
            if p + 2 < positions {
                w.view_mut(((p + 2) * n, p * n), (n, n)).copy_from(&id);
            }
        }
        w
    };
    let w1 = shift(t1, &d1);
    let w2 = shift(t2, &d2);
    let mut gt = identity(l);
    for b in 0..groups {
        let off = (1 + 4 * b) * n;
        gt.view_mut((off, off), (4 * n, 4 * n)).copy_from(&g);
    }
    let v1 = &gt * w1;
    let v2 = w2 * gt.adjoint();
    let mut j = CMatrix::zeros(l, n);
    j.view_mut((0, 0), (n, n)).copy_from(&id);
    let q = j.adjoint();
    JointDilation {
        d: 2,
        m: 0,
        inner_dim: n,
        slot_dims: vec![l],
        unitaries: vec![
            TensorFactor {
                slot: 0,
                op: SlotOperator::Dense { matrix: v1 },
            },
            TensorFactor {
                slot: 0,
                op: SlotOperator::Dense { matrix: v2 },
            },
        ],
        j,
        q,
        budget,
        n_max: vec![budget, budget],
        unitary: false,
        notes: vec![
            "pair is not doubly commuting: compressed Ando isometries (commuting contractions, not unitary)"
                .into(),
        ],
    }
}

/// Joint dilation of a commuting pair of contractions, valid for
/// `m + n ≤ budget`.
///
/// Doubly commuting pairs (`T_1T_2* = T_2*T_1`) get commuting unitaries from
/// two Schäffer dilations on a product of cyclic block spaces. Other pairs
/// get Ando's commuting isometries compressed to finite depth, flagged in
/// the result as not unitary.
pub fn ando_dilation(t1: &CMatrix, t2: &CMatrix, budget: usize) -> Result<JointDilation> {
    if t1.shape() != t2.shape() {
        return Err(Error::InvalidInput("T1 and T2 must have equal dimensions".into()));
    }
    check_contraction(t1)?;
    check_contraction(t2)?;
    check_commuting(&[t1.clone(), t2.clone()])?;
    let doubly = commutator_norm(t1, &t2.adjoint()) <= COMMUTE_TOL * 10.0;
    Ok(if doubly {
        ando_doubly_commuting(t1, t2, budget)
    } else {
        ando_general(t1, t2, budget)
    })
}

/// `(I_pre ⊗ M)·X` where `M` maps `ℂ^n` into `ℂ^{rows(M)}`.
fn lift(x: &CMatrix, pre: usize, map: &CMatrix) -> CMatrix {
    let n = map.ncols();
    let r = map.nrows();
    let mut out = CMatrix::zeros(pre * r, x.ncols());
    for a in 0..pre {
        let blk = map * x.rows(a * n, n);
        out.view_mut((a * r, 0), (r, x.ncols())).copy_from(&blk);
    }
    out
}

/// Tensor assembly of single-operator dilations (`parts`, each of the form
/// `V_k ⊗ I_H`) and an optional dilation of the remaining operators (`tail`,
/// acting on its own space `L`).
///
/// `U_k = I ⊗ … ⊗ V_k ⊗ … ⊗ I_L` for `k ≤ m`, the tail unitaries act on `L`,
/// `J = (I ⊗ J_{m+1})⋯(I ⊗ J_2)J_1` and
/// `Q = Q_1(I ⊗ Q_2)⋯(I ⊗ Q_{m+1})`. Without a tail, `L = H` and
/// `J_{m+1} = Q_{m+1} = I`.
pub fn joint_dilation(
    parts: &[&TruncatedDilation],
    tail: Option<&JointDilation>,
    t_list: &[CMatrix],
    cap: usize,
) -> Result<JointDilation> {
    let m = parts.len();
    if m == 0 {
        return Err(Error::InvalidInput("at least one single-operator part is needed".into()));
    }
    let n = parts[0].inner_dim;
    let tail_d = tail.map_or(0, |t| t.d);
    let d = m + tail_d;
    if t_list.len() != d {
        return Err(Error::InvalidInput(format!(
            "expected {d} operators for {m} parts and a tail of {tail_d}, got {}",
            t_list.len()
        )));
    }
    if t_list.iter().any(|t| t.nrows() != n || t.ncols() != n) {
        return Err(Error::InvalidInput("all operators must share the inner dimension".into()));
    }
    check_commuting(t_list)?;
    let mut slot_dims = Vec::with_capacity(m + 1);
    for (i, part) in parts.iter().enumerate() {
        let SlotOperator::Monomial(mu) = &part.v else {
            return Err(Error::InvalidInput(format!(
                "part {i} is not of the form V ⊗ I_H"
            )));
        };
        if part.inner_dim != n {
            return Err(Error::InvalidInput(format!("part {i} has the wrong inner dimension")));
        }
        slot_dims.push(mu.dim());
    }
    if let Some(tl) = tail {
        if tl.m != 0 || tl.slot_dims.len() != 1 || tl.inner_dim != n {
            return Err(Error::InvalidInput(
                "tail must be a dilation on a single space over the same H".into(),
            ));
        }
        slot_dims.push(tl.slot_dims[0]);
    } else {
        slot_dims.push(n);
    }
    let total: usize = slot_dims.iter().product();
    if total > cap {
        return Err(Error::DimensionOverflow { dim: total, cap });
    }

    for (i, part) in parts.iter().enumerate() {
        let k = slot_dims[i];
        for (jdx, tj) in t_list.iter().enumerate() {
            let lhs = &part.j * tj;
            let rhs = lift(&part.j, k, tj);
            let defect = opnorm(&(lhs - rhs));
            if defect > INTERTWINE_TOL * opnorm(&part.j).max(1.0) * opnorm(tj).max(1.0) {
                return Err(Error::IntertwineFailed {
                    i: i + 1,
                    j: jdx + 1,
                    defect,
                });
            }
        }
    }

    let mut j = parts[0].j.clone();
    let mut q_adj = parts[0].q.adjoint();
    let mut pre = slot_dims[0];
    for (i, part) in parts.iter().enumerate().skip(1) {
        j = lift(&j, pre, &part.j);
        q_adj = lift(&q_adj, pre, &part.q.adjoint());
        pre *= slot_dims[i];
    }
    if let Some(tl) = tail {
        j = lift(&j, pre, &tl.j);
        q_adj = lift(&q_adj, pre, &tl.q.adjoint());
    }

    let mut unitaries: Vec<TensorFactor> = parts
        .iter()
        .enumerate()
        .map(|(i, p)| TensorFactor {
            slot: i,
            op: p.v.clone(),
        })
        .collect();
    let mut n_max: Vec<usize> = parts.iter().map(|p| p.n_max).collect();
    let mut budget = parts.iter().map(|p| p.n_max).min().unwrap_or(0);
    let mut unitary = true;
    let mut notes = Vec::new();
    if let Some(tl) = tail {
        for f in &tl.unitaries {
            unitaries.push(TensorFactor {
                slot: m,
                op: f.op.clone(),
            });
        }
        n_max.extend(&tl.n_max);
        budget = budget.min(tl.budget);
        unitary = tl.unitary;
        notes.extend(tl.notes.iter().cloned());
    }
    Ok(JointDilation {
        d,
        m,
        inner_dim: n,
        slot_dims,
        unitaries,
        j,
        q: q_adj.adjoint(),
        budget,
        n_max,
        unitary,
        notes,
    })
}

/// [`joint_dilation`] with the default dimension cap.
pub fn joint_dilation_default(
    parts: &[&TruncatedDilation],
    tail: Option<&JointDilation>,
    t_list: &[CMatrix],
) -> Result<JointDilation> {
    joint_dilation(parts, tail, t_list, DEFAULT_KRON_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, from_rows, real_diag, zeros, ZERO};

    #[test]
    fn monomial_is_unitary() {
        let mu = MonomialUnitary {
            phases: vec![C64::from_polar(1.0, 0.3), -ONE],
            period: 8,
            step: 2,
        };
        assert_eq!(mu.unitarity_defect(), 0.0);
        let dense = mu.to_dense();
        assert!(opnorm(&(dense.adjoint() * &dense - identity(10))) < 1e-15);
        let x = CMatrix::from_fn(10, 1, |i, _| c(i as f64, 0.0));
        let y = SlotOperator::Monomial(mu.clone()).apply_slot(&x, 1, 1, 3);
        let mut z = x.clone();
        for _ in 0..3 {
            z = &dense * z;
        }
        assert!(opnorm(&(y - z)) < 1e-14);
        // (Vy)_p = y_{p+2}
        assert_eq!(dense[(2, 4)], ONE);
    }

    #[test]
    fn peripheral_scalar_case_is_exact() {
        let xi = C64::from_polar(1.0, 0.8);
        let e = PointSetE::new(vec![xi]).unwrap();
        let t = identity(2) * xi;
        let dil = specific_dilation(&t, &e, 10, 1e-9).unwrap();
        assert!(dilation_check(&dil, &t, 10) < 1e-12);
    }

    #[test]
    fn zero_operator() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let t = zeros(2);
        let dil = specific_dilation(&t, &e, 12, 1e-9).unwrap();
        let errs = dil.errors(&t, 12);
        assert!(errs.iter().all(|&x| x < 1e-10), "{errs:?}");
    }

    #[test]
    fn half_identity() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let t = identity(2) * c(0.5, 0.0);
        let dil = specific_dilation(&t, &e, 20, 1e-9).unwrap();
        assert!(dilation_check(&dil, &t, 20) <= 1e-8);
        assert_eq!(dil.unitarity_defect(), 0.0);
    }

    #[test]
    fn mixed_peripheral_and_interior() {
        let e = PointSetE::from_angles(&[0.0, 2.0]).unwrap();
        let t = from_rows(&[
            vec![ONE, c(0.3, 0.1), ZERO],
            vec![ZERO, c(0.2, 0.3), c(0.1, 0.0)],
            vec![ZERO, ZERO, C64::from_polar(1.0, 2.0)],
        ]);
        let dil = specific_dilation(&t, &e, 20, 1e-10).unwrap();
        assert!(dilation_check(&dil, &t, 20) <= 1e-8);
    }

    #[test]
    fn schaffer_examples() {
        let t = real_diag(&[0.5, -0.3]);
        let dil = schaffer_dilation(&t, 12).unwrap();
        assert!(dil.unitarity_defect() < 1e-12);
        assert!(dilation_check(&dil, &t, 24) < 1e-12);
        let z = schaffer_dilation(&zeros(2), 4).unwrap();
        assert!(dil.j.ncols() == 2 && dilation_check(&z, &zeros(2), 4) == 0.0);
        assert!(matches!(
            schaffer_dilation(&real_diag(&[1.1]), 3),
            Err(Error::NotContraction(_))
        ));
    }

    #[test]
    fn ando_diagonal_pair() {
        let t1 = real_diag(&[0.5, 0.3]);
        let t2 = real_diag(&[0.2, 0.7]);
        let jd = ando_dilation(&t1, &t2, 8).unwrap();
        assert!(jd.unitary);
        assert!(jd.unitarity_defect() < 1e-12);
        assert!(jd.commutation_defect() < 1e-12);
        assert!(jd.check(&[t1, t2], 8) < 1e-12);
    }

    #[test]
    fn ando_general_pair_commutes() {
        // Commuting but not doubly commuting: a polynomial pair in a Jordan-type contraction.
        let s = from_rows(&[vec![c(0.3, 0.0), c(0.5, 0.0)], vec![ZERO, c(0.3, 0.0)]]);
        let t1 = &s * c(0.9, 0.0);
        let t2 = &s * &s + &s * c(0.2, 0.0);
        assert!(commutator_norm(&t1, &t2.adjoint()) > 1e-6);
        let jd = ando_dilation(&t1, &t2, 6).unwrap();
        assert!(!jd.unitary);
        assert!(jd.commutation_defect() < 1e-12);
        assert!(jd.check(&[t1, t2], 6) < 1e-12);
    }

    #[test]
    fn joint_with_identity_tail() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let t1 = real_diag(&[1.0, 0.4]);
        let id = identity(2);
        let dil = specific_dilation(&t1, &e, 5, 1e-10).unwrap();
        let tail = ando_dilation(&id, &id, 5).unwrap();
        let jd = joint_dilation(&[&dil], Some(&tail), &[t1.clone(), id.clone(), id.clone()], 4096)
            .unwrap();
        assert!(jd.check(&[t1, id.clone(), id], 5) <= 1e-8);
    }

    #[test]
    fn single_part_reduces_to_specific() {
        let e = PointSetE::new(vec![ONE]).unwrap();
        let t = real_diag(&[1.0, 0.4]);
        let dil = specific_dilation(&t, &e, 6, 1e-10).unwrap();
        let jd = joint_dilation(&[&dil], None, std::slice::from_ref(&t), 4096).unwrap();
        assert!((jd.check(std::slice::from_ref(&t), 6) - dilation_check(&dil, &t, 6)).abs() < 1e-12);
    }
}
