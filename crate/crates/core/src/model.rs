//! Spin-1 operator algebra, gauge-sector basis enumeration, the three
//! lattice Hamiltonians, Gauss operators, and the spin-S operator checks.
//!
//! Spin words are base-3 encoded: link `l` holds digit (m+1) ∈ {0,1,2} at
//! weight 3^l, so the all-zeros flux configuration is the word with every
//! digit 1. Matrix bases are ordered by ascending word value, which makes
//! every assembled operator reproducible bit-for-bit.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::lattice::{LatticeGeometry, PairMode};
use crate::sparse::{BasisTag, LinearOp, SparseBuilder, SparseOperator};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// 3^i for word arithmetic.
#[inline]
pub fn pow3(i: usize) -> u64 {
    3u64.pow(i as u32)
}

/// Digit (m+1) of `word` at link `l`.
#[inline]
pub fn digit(word: u64, l: usize) -> u8 {
    ((word / pow3(l)) % 3) as u8
}

/// Electric flux m ∈ {−1, 0, +1} of `word` at link `l`.
#[inline]
pub fn flux(word: u64, l: usize) -> i32 {
    digit(word, l) as i32 - 1
}

/// Word with the digit at link `l` replaced.
#[inline]
pub fn with_digit(word: u64, l: usize, d: u8) -> u64 {
    let p = pow3(l);
    word - (u64::from(digit(word, l))) * p + u64::from(d) * p
}

/// Fixed spin-1 matrices over the basis {|+1⟩, |0⟩, |−1⟩} and the qutrit
/// unitaries used by the measurement protocols.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub sz: Matrix3<f64>,
    pub splus: Matrix3<f64>,
    pub sminus: Matrix3<f64>,
}

/// S^z, S^± with S⁺ = √2 [[0,1,0],[0,0,1],[0,0,0]].
pub fn spin1_ops() -> SpinOps {
    let sz = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 0.0, -1.0));
    let splus = Matrix3::new(0.0, SQRT2, 0.0, 0.0, 0.0, SQRT2, 0.0, 0.0, 0.0);
    SpinOps { sz, splus, sminus: splus.transpose() }
}

/// ξ = e^{i2π/3}.
pub fn xi_phase() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)
}

/// Cyclic shift with a phase on the wrap-around:
/// X(φ) = [[0,1,0],[0,0,1],[e^{iφ},0,0]] = S⁺/√2 + e^{iφ}(S⁻)²/2.
pub fn x_phase(phi: f64) -> Matrix3<Complex64> {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    Matrix3::new(z, one, z, z, z, one, Complex64::from_polar(1.0, phi), z, z)
}

/// Qutrit Fourier transform F = (1/√3) Σ ξ^{rs} |r⟩⟨s|.
pub fn fourier_f() -> Matrix3<Complex64> {
    let xi = xi_phase();
    let n = 1.0 / 3.0_f64.sqrt();
    Matrix3::from_fn(|r, s| xi.powu((r * s) as u32) * n)
}

/// The modified transform used for the second Wilson run:
/// F′ = (1/√3) [[1, ξ, ξ²], [−1, −ξ², −ξ], [1, 1, 1]].
pub fn fourier_fprime() -> Matrix3<Complex64> {
    let xi = xi_phase();
    let n = Complex64::new(1.0 / 3.0_f64.sqrt(), 0.0);
    let one = Complex64::ONE;
    Matrix3::new(one, xi, xi * xi, -one, -xi * xi, -xi, one, one, one).map(|v| v * n)
}

/// Z = diag(1, ξ, ξ²).
pub fn z_clock() -> Matrix3<Complex64> {
    let xi = xi_phase();
    Matrix3::from_diagonal(&nalgebra::Vector3::new(Complex64::ONE, xi, xi * xi))
}

/// Spin-S link operators Ŵ, Ŵ†, Ê in the (N+1)-dimensional representation,
/// ordered from E = +N/2 down to −N/2.
#[derive(Debug, Clone)]
pub struct LargeNOps {
    pub n_rep: u32,
    pub w: DMatrix<f64>,
    pub w_dagger: DMatrix<f64>,
    pub e: DMatrix<f64>,
}

/// Normalized ladder operators with Ŵ = Û/√(N/2 (N/2+1)), satisfying
/// [Ŵ†, Ŵ] = 2Ê/(N/2 (N/2+1)).
pub fn large_n_ops(n_rep: u32) -> Result<LargeNOps> {
    if n_rep == 0 {
        return Err(CoreError::Argument("representation label must be >= 1".into()));
    }
    let dim = n_rep as usize + 1;
    let s = n_rep as f64 / 2.0;
    let e_of = |idx: usize| s - idx as f64;
    let mut w = DMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let e = e_of(idx);
        // W |E⟩ = √((s+1−E)/(s+1)) √((s+E)/s) |E−1⟩; idx(E−1) = idx+1.
        if idx + 1 < dim {
            w[(idx + 1, idx)] = ((s + 1.0 - e) / (s + 1.0)).sqrt() * ((s + e) / s).sqrt();
        }
    }
    let e = DMatrix::from_fn(dim, dim, |r, c| if r == c { e_of(r) } else { 0.0 });
    Ok(LargeNOps { n_rep, w_dagger: w.transpose(), w, e })
}

/// Sorted word list over `n_links` links; `words = None` means the full
/// 3^n space in natural word order.
#[derive(Debug, Clone)]
pub struct WordBasis {
    pub n_links: usize,
    words: Option<Arc<Vec<u64>>>,
    pub tag: BasisTag,
}

impl WordBasis {
    pub fn full(n_links: usize) -> Result<Self> {
        if n_links > 20 {
            return Err(CoreError::Capacity {
                estimate: 3usize.saturating_pow(n_links as u32),
                limit: 3usize.pow(20),
            });
        }
        Ok(Self { n_links, words: None, tag: BasisTag::Full })
    }

    pub fn from_words(n_links: usize, mut words: Vec<u64>, tag: BasisTag) -> Self {
        words.sort_unstable();
        words.dedup();
        Self { n_links, words: Some(Arc::new(words)), tag }
    }

    pub fn dim(&self) -> usize {
        match &self.words {
            Some(w) => w.len(),
            None => pow3(self.n_links) as usize,
        }
    }

    #[inline]
    pub fn word_at(&self, i: usize) -> u64 {
        match &self.words {
            Some(w) => w[i],
            None => i as u64,
        }
    }

    /// Index of a word, if it belongs to the basis.
    #[inline]
    pub fn index_of(&self, word: u64) -> Option<usize> {
        match &self.words {
            Some(w) => w.binary_search(&word).ok(),
            None => (word < pow3(self.n_links)).then_some(word as usize),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.dim()).map(|i| self.word_at(i))
    }
}

/// The enumerated zero-charge sector of a geometry.
#[derive(Debug, Clone)]
pub struct GaugeBasis {
    pub geometry: Arc<LatticeGeometry>,
    pub words: WordBasis,
}

impl GaugeBasis {
    pub fn dim(&self) -> usize {
        self.words.dim()
    }
}

/// Signed vertex charge of a word: Σ_star sign · m.
pub fn vertex_charge(g: &LatticeGeometry, word: u64, vertex: usize, signed: bool) -> i32 {
    g.vertex_star[vertex]
        .iter()
        .map(|&(l, s)| if signed { i32::from(s) * flux(word, l) } else { flux(word, l) })
        .sum()
}

const BASIS_WORD_LIMIT: usize = 60_000_000;

/// Enumerate the gauge-invariant sector: all words with zero signed charge
/// at every vertex, by depth-first search with per-vertex feasibility
/// pruning (a partial sum can still reach zero only if |sum| ≤ links left).
pub fn gauge_basis(g: &LatticeGeometry) -> Result<GaugeBasis> {
    gauge_basis_with(g, true)
}

pub fn gauge_basis_with(g: &LatticeGeometry, signed: bool) -> Result<GaugeBasis> {
    let n = g.n_links();
    if n > 40 {
        return Err(CoreError::Capacity {
            estimate: 3usize.saturating_pow(n as u32),
            limit: BASIS_WORD_LIMIT,
        });
    }
    let nv = g.n_vertices;
    // Links touching each vertex, with the Gauss sign used.
    let mut remaining: Vec<i32> = (0..nv).map(|v| g.vertex_star[v].len() as i32).collect();
    let mut sums = vec![0i32; nv];
    // For each link, the (vertex, sign) incidences.
    let incidences: Vec<Vec<(usize, i32)>> = (0..n)
        .map(|l| {
            let mut inc = Vec::new();
            for (v, star) in g.vertex_star.iter().enumerate() {
                for &(link, s) in star {
                    if link == l {
                        inc.push((v, if signed { i32::from(s) } else { 1 }));
                    }
                }
            }
            inc
        })
        .collect();

    let mut words = Vec::new();
    let mut stack_digits = vec![0u8; n];
    fn dfs(
        depth: usize,
        n: usize,
        incidences: &[Vec<(usize, i32)>],
        sums: &mut [i32],
        remaining: &mut [i32],
        digits: &mut [u8],
        words: &mut Vec<u64>,
    ) -> Result<()> {
        if depth == n {
            let mut w = 0u64;
            for (l, &d) in digits.iter().enumerate() {
                w += u64::from(d) * pow3(l);
            }
            words.push(w);
            if words.len() > BASIS_WORD_LIMIT {
                return Err(CoreError::Capacity {
                    estimate: words.len(),
                    limit: BASIS_WORD_LIMIT,
                });
            }
            return Ok(());
        }
        for d in 0..3u8 {
            let m = i32::from(d) - 1;
            let mut ok = true;
            for &(v, s) in &incidences[depth] {
                sums[v] += s * m;
                remaining[v] -= 1;
            }
            for &(v, _) in &incidences[depth] {
                if sums[v].abs() > remaining[v] {
                    ok = false;
                }
            }
            if ok {
                digits[depth] = d;
                dfs(depth + 1, n, incidences, sums, remaining, digits, words)?;
            }
            for &(v, s) in &incidences[depth] {
                sums[v] -= s * m;
                remaining[v] += 1;
            }
        }
        Ok(())
    }
    dfs(0, n, &incidences, &mut sums, &mut remaining, &mut stack_digits, &mut words)?;
    words.sort_unstable();
    Ok(GaugeBasis {
        geometry: Arc::new(g.clone()),
        words: WordBasis::from_words(n, words, BasisTag::GaugeSector),
    })
}

/// All words with total magnetization Σm = `m_total` (the sector flip-flop
/// dynamics preserves), enumerated without visiting the full 3^n space.
pub fn magnetization_basis(n_links: usize, m_total: i32) -> WordBasis {
    let mut words = Vec::new();
    fn rec(l: usize, n: usize, word: u64, m_acc: i32, target: i32, out: &mut Vec<u64>) {
        let left = (n - l) as i32;
        if (m_acc - target).abs() > left {
            return;
        }
        if l == n {
            out.push(word);
            return;
        }
        for d in 0..3u8 {
            rec(l + 1, n, word + u64::from(d) * pow3(l), m_acc + i32::from(d) - 1, target, out);
        }
    }
    rec(0, n_links, 0, 0, m_total, &mut words);
    WordBasis::from_words(n_links, words, BasisTag::Sector)
}

// S⁻ amplitude on spin-1: S⁻|m⟩ = √((1+m)(2−m)) |m−1⟩.
#[inline]
fn lower_amp(m: i32) -> f64 {
    (((1 + m) * (2 - m)) as f64).sqrt()
}

// S⁺ amplitude: S⁺|m⟩ = √((1−m)(2+m)) |m+1⟩.
#[inline]
fn raise_amp(m: i32) -> f64 {
    (((1 - m) * (2 + m)) as f64).sqrt()
}

/// Apply the ring-exchange product over a plaquette tuple: traversal-positive
/// links carry the lowering operator (the link displacement), traversal-negative
/// links the raising operator. Returns the image word and its amplitude.
pub fn apply_ring_exchange(word: u64, plq: &[(usize, i8); 4]) -> Option<(u64, f64)> {
    let mut w = word;
    let mut amp = 1.0;
    for &(l, trav) in plq {
        let m = flux(w, l);
        let (a, dm) = if trav > 0 { (lower_amp(m), -1) } else { (raise_amp(m), 1) };
        if a == 0.0 {
            return None;
        }
        amp *= a;
        w = with_digit(w, l, (m + dm + 1) as u8);
    }
    Some((w, amp))
}

/// Pure gauge Hamiltonian on the gauge sector:
/// H = g²_elec Σ (S^z)² − g²_mag_inv Σ_□ (ring exchange + h.c.).
pub fn build_h_qlm(
    basis: &GaugeBasis,
    g2_elec: f64,
    g2_mag_inv: f64,
) -> Result<SparseOperator> {
    build_h_qlm_on(&basis.geometry, &basis.words, g2_elec, g2_mag_inv)
}

/// Same operator over an arbitrary word basis (used for full-space checks).
pub fn build_h_qlm_on(
    g: &LatticeGeometry,
    basis: &WordBasis,
    g2_elec: f64,
    g2_mag_inv: f64,
) -> Result<SparseOperator> {
    if basis.dim() == 0 {
        return Err(CoreError::Argument("empty basis".into()));
    }
    let mut b = SparseBuilder::new(basis.dim(), basis.tag);
    for i in 0..basis.dim() {
        let w = basis.word_at(i);
        let e2: i32 = (0..g.n_links()).map(|l| flux(w, l).pow(2)).sum();
        b.push_real(i, i, g2_elec * e2 as f64);
        for plq in &g.plaquettes {
            if let Some((w2, amp)) = apply_ring_exchange(w, plq) {
                if let Some(j) = basis.index_of(w2) {
                    b.push_real(j, i, -g2_mag_inv * amp);
                    b.push_real(i, j, -g2_mag_inv * amp);
                }
            }
        }
    }
    Ok(b.finish(true))
}

/// Two-body implementation Hamiltonian on the full space or a word sector:
/// H = V Σ (S^z)² + U Σ_v (Σ_star ±S^z)² + J Σ_{⟨j,k⟩} (S⁺S⁻ + S⁻S⁺).
pub fn build_h_imp(
    g: &LatticeGeometry,
    basis: &WordBasis,
    v: f64,
    u: f64,
    j: f64,
    pair_mode: PairMode,
    signed_gauss: bool,
) -> Result<SparseOperator> {
    if basis.dim() == 0 {
        return Err(CoreError::Argument("empty basis".into()));
    }
    let pairs = g.pairs(pair_mode);
    let mut b = SparseBuilder::new(basis.dim(), basis.tag);
    for i in 0..basis.dim() {
        let w = basis.word_at(i);
        b.push_real(i, i, h_imp_diagonal(g, w, v, u, signed_gauss));
        for &(la, lb) in &pairs {
            // S⁺_a S⁻_b, with its adjoint emitted alongside.
            let (ma, mb) = (flux(w, la), flux(w, lb));
            let amp = raise_amp(ma) * lower_amp(mb);
            if amp != 0.0 {
                let w2 = with_digit(with_digit(w, la, (ma + 2) as u8), lb, mb as u8);
                if let Some(k) = basis.index_of(w2) {
                    b.push_real(k, i, j * amp);
                    b.push_real(i, k, j * amp);
                }
            }
        }
    }
    Ok(b.finish(true))
}

/// Diagonal part of H_imp on one word: V Σm² + U Σ_v (charge)².
pub fn h_imp_diagonal(g: &LatticeGeometry, w: u64, v: f64, u: f64, signed: bool) -> f64 {
    let e2: i32 = (0..g.n_links()).map(|l| flux(w, l).pow(2)).sum();
    let gauss2: i32 = (0..g.n_vertices).map(|vx| vertex_charge(g, w, vx, signed).pow(2)).sum();
    v * e2 as f64 + u * gauss2 as f64
}

/// Effective gauge-invariant Hamiltonian on the gauge sector:
/// H = (V + 2J²/U) Σ(S^z)² − (2J²/U) Σ_□(ring + h.c.)
///   + (J²/4U) Σ_{⟨j,k⟩} S^z_j S^z_k (1 − S^z_j S^z_k).
pub fn build_h_eff(
    basis: &GaugeBasis,
    v: f64,
    u: f64,
    j: f64,
    pair_mode: PairMode,
) -> Result<SparseOperator> {
    if !(u > 0.0) {
        return Err(CoreError::Argument(format!("h_eff requires u > 0, got {u}")));
    }
    build_h_eff_on(&basis.geometry, &basis.words, v, u, j, pair_mode)
}

pub fn build_h_eff_on(
    g: &LatticeGeometry,
    basis: &WordBasis,
    v: f64,
    u: f64,
    j: f64,
    pair_mode: PairMode,
) -> Result<SparseOperator> {
    if basis.dim() == 0 {
        return Err(CoreError::Argument("empty basis".into()));
    }
    let j2u = j * j / u;
    let pairs = g.pairs(pair_mode);
    let mut b = SparseBuilder::new(basis.dim(), basis.tag);
    for i in 0..basis.dim() {
        let w = basis.word_at(i);
        let e2: i32 = (0..g.n_links()).map(|l| flux(w, l).pow(2)).sum();
        let mut diag = (v + 2.0 * j2u) * e2 as f64;
        for &(la, lb) in &pairs {
            let zz = (flux(w, la) * flux(w, lb)) as f64;
            diag += 0.25 * j2u * zz * (1.0 - zz);
        }
        b.push_real(i, i, diag);
        for plq in &g.plaquettes {
            if let Some((w2, amp)) = apply_ring_exchange(w, plq) {
                if let Some(k) = basis.index_of(w2) {
                    b.push_real(k, i, -2.0 * j2u * amp);
                    b.push_real(i, k, -2.0 * j2u * amp);
                }
            }
        }
    }
    Ok(b.finish(true))
}

/// Signed Gauss charge operator G_v = Σ_star ±S^z as a diagonal sparse
/// operator on the given basis.
pub fn gauss_operator(
    g: &LatticeGeometry,
    basis: &WordBasis,
    vertex: usize,
    signed: bool,
) -> Result<SparseOperator> {
    if vertex >= g.n_vertices {
        return Err(CoreError::Argument(format!("vertex {vertex} out of range")));
    }
    let mut b = SparseBuilder::new(basis.dim(), basis.tag);
    for i in 0..basis.dim() {
        let q = vertex_charge(g, basis.word_at(i), vertex, signed);
        b.push_real(i, i, q as f64);
    }
    Ok(b.finish(true))
}

/// Matrix-free H_imp on a word sector, for dimensions where assembling CSR
/// would not fit in memory. Flip-flop targets are recomputed per matvec and
/// located by binary search; rows evaluate independently so the parallel
/// apply is deterministic.
pub struct HImpSectorOp {
    geometry: Arc<LatticeGeometry>,
    basis: WordBasis,
    v: f64,
    u: f64,
    j: f64,
    pairs: Vec<(usize, usize)>,
    signed: bool,
}

impl HImpSectorOp {
    pub fn new(
        g: Arc<LatticeGeometry>,
        basis: WordBasis,
        v: f64,
        u: f64,
        j: f64,
        pair_mode: PairMode,
        signed: bool,
    ) -> Self {
        let pairs = g.pairs(pair_mode);
        Self { geometry: g, basis, v, u, j, pairs, signed }
    }

    pub fn basis(&self) -> &WordBasis {
        &self.basis
    }
}

impl LinearOp for HImpSectorOp {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let g = &*self.geometry;
        y.par_iter_mut().enumerate().for_each(|(i, out)| {
            let w = self.basis.word_at(i);
            let mut acc = h_imp_diagonal(g, w, self.v, self.u, self.signed) * x[i];
            for &(la, lb) in &self.pairs {
                let (ma, mb) = (flux(w, la), flux(w, lb));
                // ⟨w| J S⁺_aS⁻_b |w2⟩ row contribution: apply the adjoint
                // moves from w and read the source amplitudes.
                let amp_up = lower_amp(ma) * raise_amp(mb);
                if amp_up != 0.0 {
                    let w2 = with_digit(with_digit(w, la, ma as u8), lb, (mb + 2) as u8);
                    if let Some(k) = self.basis.index_of(w2) {
                        acc += self.j * amp_up * x[k];
                    }
                }
                let amp_dn = raise_amp(ma) * lower_amp(mb);
                if amp_dn != 0.0 {
                    let w2 = with_digit(with_digit(w, la, (ma + 2) as u8), lb, mb as u8);
                    if let Some(k) = self.basis.index_of(w2) {
                        acc += self.j * amp_dn * x[k];
                    }
                }
            }
            *out = acc;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| h_imp_diagonal(&self.geometry, self.basis.word_at(i), self.v, self.u, self.signed))
            .collect()
    }
}
