//! Ground-state and gap computation: dense diagonalization for tiny
//! operators, Lanczos with full reorthogonalization for gauge-sector
//! matrices, a preconditioned block solver for large magnetization sectors,
//! and the parameter-sweep driver.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::lattice::{middle_plaquette, thooft_path, LatticeGeometry, PairMode};
use crate::model::{self, GaugeBasis, HImpSectorOp, WordBasis};
use crate::observe::{self, StateVector, StringConvention};
use crate::sparse::{LinearOp, SparseOperator};

/// Deterministic 64-bit generator for solver start vectors.
#[derive(Debug, Clone)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [−0.5, 0.5).
    pub fn next_centered(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

/// Eigenpairs with their true residuals.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Lowest eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Matching eigenvectors (real amplitudes over the operator's basis).
    pub vectors: Vec<Vec<f64>>,
    /// ‖Hx − Ex‖ per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Lowest two eigenvalues closer than 1e-10 × scale.
    pub degenerate: bool,
}

impl EigResult {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn gap(&self) -> Option<f64> {
        (self.energies.len() >= 2).then(|| self.energies[1] - self.energies[0])
    }
}

const DENSE_DIM_CAP: usize = 4096;

/// Full spectrum by dense symmetric diagonalization (dimension ≤ 4096).
pub fn dense_eig(h: &SparseOperator) -> Result<EigResult> {
    if h.dim() > DENSE_DIM_CAP {
        return Err(CoreError::Argument(format!(
            "dense_eig capped at {DENSE_DIM_CAP}, operator has dimension {}",
            h.dim()
        )));
    }
    h.require_real_symmetric()?;
    let dense = h.to_dense().map(|z| z.re);
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let residuals = residual_norms(h, &energies, &vectors);
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
    let degenerate = energies.len() >= 2 && (energies[1] - energies[0]).abs() < 1e-10 * scale;
    Ok(EigResult { energies, vectors, residuals, iterations: 1, degenerate })
}

fn residual_norms(op: &dyn LinearOp, energies: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    energies
        .iter()
        .zip(vectors)
        .map(|(&e, x)| {
            let mut y = vec![0.0; op.dim()];
            op.apply(x, &mut y);
            y.iter().zip(x).map(|(yi, xi)| (yi - e * xi).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Options for the Lanczos run.
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 2000, tol: 1e-10, seed: 0x5eed }
    }
}

/// Lowest-k eigenpairs via Lanczos with full reorthogonalization.
///
/// Deterministic for a given seed (the start vector comes from a SplitMix64
/// stream, all reductions are sequential, and the parallel matvec is
/// row-partitioned). Residuals are re-checked post hoc against the Ritz
/// estimates.
pub fn lanczos_ground(
    op: &dyn LinearOp,
    k: usize,
    opts: LanczosOptions,
) -> Result<EigResult> {
    lanczos_ground_with_start(op, k, opts, None)
}

/// As [`lanczos_ground`], with an optional warm-start vector.
pub fn lanczos_ground_with_start(
    op: &dyn LinearOp,
    k: usize,
    opts: LanczosOptions,
    start: Option<&[f64]>,
) -> Result<EigResult> {
    let n = op.dim();
    if n == 0 || k == 0 || k > 6 {
        return Err(CoreError::Argument(format!("need 1 ≤ k ≤ 6 and a nonempty basis (k={k})")));
    }
    let k = k.min(n);
    let mut v = match start {
        Some(s) if s.len() == n && norm(s) > 0.0 => s.to_vec(),
        _ => {
            let mut rng = SplitMix64(opts.seed);
            (0..n).map(|_| rng.next_centered()).collect()
        }
    };
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let max_iter = opts.max_iter.min(n);
    let mut scale = 1e-300_f64;

    let mut converged_eigs: Option<(Vec<f64>, nalgebra::DMatrix<f64>)> = None;
    let mut iterations = 0;
    for j in 0..max_iter {
        iterations = j + 1;
        op.apply(&basis[j], &mut w);
        if j > 0 {
            let b = betas[j - 1];
            let prev = &basis[j - 1];
            w.iter_mut().zip(prev).for_each(|(wi, pi)| *wi -= b * pi);
        }
        let a = dot(&w, &basis[j]);
        alphas.push(a);
        w.iter_mut().zip(&basis[j]).for_each(|(wi, vi)| *wi -= a * vi);
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for q in &basis {
                let p = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= p * qi);
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs() + b);

        let m = alphas.len();
        let check = b < 1e-14 * scale || m >= k + 2;
        if check {
            let mut t = nalgebra::DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
            let lowest: Vec<usize> = order.iter().take(k).copied().collect();
            let resid_ok = lowest
                .iter()
                .all(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() <= opts.tol * scale);
            if (resid_ok && m >= k) || b < 1e-14 * scale || j + 1 == max_iter {
                let energies: Vec<f64> = lowest.iter().map(|&i| eig.eigenvalues[i]).collect();
                let mut cols = nalgebra::DMatrix::zeros(m, k);
                for (c, &i) in lowest.iter().enumerate() {
                    cols.set_column(c, &eig.eigenvectors.column(i));
                }
                converged_eigs = Some((energies, cols));
                if resid_ok || b < 1e-14 * scale {
                    break;
                }
            }
        }
        if b < 1e-14 * scale {
            break;
        }
        betas.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }

    let (energies, y) = converged_eigs.ok_or(CoreError::Numeric {
        what: "lanczos",
        msg: format!("no Ritz extraction after {iterations} iterations"),
    })?;
    let m = y.nrows();
    let vectors: Vec<Vec<f64>> = (0..energies.len())
        .map(|c| {
            let mut x = vec![0.0; n];
            for (j, q) in basis.iter().take(m).enumerate() {
                let w = y[(j, c)];
                x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += w * qi);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|xi| *xi /= nx);
            x
        })
        .collect();
    let residuals = residual_norms(op, &energies, &vectors);
    if residuals.iter().any(|&r| r > 100.0 * opts.tol * scale) {
        return Err(CoreError::Numeric {
            what: "lanczos",
            msg: format!(
                "residuals {residuals:?} above tolerance after {iterations} iterations \
                 (Ritz history: {} basis vectors, scale {scale:.3e})",
                basis.len()
            ),
        });
    }
    let degenerate =
        energies.len() >= 2 && (energies[1] - energies[0]).abs() < 1e-10 * scale;
    Ok(EigResult { energies, vectors, residuals, iterations, degenerate })
}

/// Lowest-k eigenpairs (k ≤ 2) by a locally-optimal preconditioned block
/// iteration with a diagonal preconditioner.
///
/// Memory stays at a few working vectors, which is what the large
/// magnetization-sector operators need; convergence is fast because those
/// operators are diagonally dominated by the Gauss penalty. Operator images
/// are carried through the Rayleigh–Ritz combinations, so each iteration
/// costs k fresh applications.
pub fn preconditioned_ground(
    op: &dyn LinearOp,
    k: usize,
    tol: f64,
    seed: u64,
    max_iter: usize,
) -> Result<EigResult> {
    preconditioned_ground_with_start(op, k, tol, seed, max_iter, None)
}

/// As [`preconditioned_ground`], with optional warm-start vectors.
pub fn preconditioned_ground_with_start(
    op: &dyn LinearOp,
    k: usize,
    tol: f64,
    seed: u64,
    max_iter: usize,
    start: Option<&[Vec<f64>]>,
) -> Result<EigResult> {
    let n = op.dim();
    if k == 0 || k > 2 || n == 0 {
        return Err(CoreError::Argument("preconditioned solver supports 1 ≤ k ≤ 2".into()));
    }
    let k = k.min(n);
    // Excited pairs are reported to a looser (still tight) tolerance: their
    // Ritz values settle long before their vectors stop rotating inside
    // near-degenerate manifolds.
    let tol_excited = tol.max(1e-7);
    let diag = op.diagonal();
    let scale0 = diag.iter().fold(1e-300f64, |m, d| m.max(d.abs()));
    let mut rng = SplitMix64(seed);

    // Start block: warm vectors when provided, else lowest-diagonal unit
    // vectors with a small random admixture.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap().then(a.cmp(&b)));
    let mut xs: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut x: Vec<f64> = match start {
                Some(s) if i < s.len() && s[i].len() == n => s[i].clone(),
                _ => {
                    let mut x: Vec<f64> = (0..n).map(|_| 1e-3 * rng.next_centered()).collect();
                    x[idx[i]] += 1.0;
                    x
                }
            };
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            x
        })
        .collect();
    let apply = |v: &[f64]| {
        let mut y = vec![0.0; n];
        op.apply(v, &mut y);
        y
    };
    let mut hxs: Vec<Vec<f64>> = xs.iter().map(|x| apply(x)).collect();
    let mut ps: Vec<Vec<f64>> = Vec::new();
    let mut hps: Vec<Vec<f64>> = Vec::new();
    let mut energies = vec![0.0; k];
    let mut iterations = 0;
    let mut scale = scale0;

    for it in 0..max_iter {
        iterations = it + 1;
        let rho: Vec<f64> = (0..k).map(|i| dot(&hxs[i], &xs[i])).collect();
        scale = scale.max(rho.iter().fold(0.0f64, |m, r| m.max(r.abs())));
        let mut converged = true;
        let mut ws: Vec<Vec<f64>> = Vec::with_capacity(k);
        let floor = 1e-4 * scale.max(1.0);
        for i in 0..k {
            let r: Vec<f64> = hxs[i].iter().zip(&xs[i]).map(|(h, x)| h - rho[i] * x).collect();
            let rn = norm(&r);
            let target = if i == 0 { tol } else { tol_excited };
            if rn > target * scale {
                converged = false;
            }
            let w: Vec<f64> = r
                .iter()
                .zip(&diag)
                .map(|(ri, di)| ri / (di - rho[i]).max(floor))
                .collect();
            ws.push(w);
        }
        energies = rho;
        if converged {
            break;
        }
        let hws: Vec<Vec<f64>> = ws.iter().map(|w| apply(w)).collect();

        // Rayleigh–Ritz over S = [X, W, P] using the Gram matrix, carrying
        // the H-images through the combination.
        let s_vecs: Vec<&Vec<f64>> = xs.iter().chain(ws.iter()).chain(ps.iter()).collect();
        let hs_vecs: Vec<&Vec<f64>> = hxs.iter().chain(hws.iter()).chain(hps.iter()).collect();
        let m = s_vecs.len();
        let mut gram = nalgebra::DMatrix::zeros(m, m);
        let mut amat = nalgebra::DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let gv = dot(s_vecs[i], s_vecs[j]);
                gram[(i, j)] = gv;
                gram[(j, i)] = gv;
                let av = 0.5 * (dot(s_vecs[i], hs_vecs[j]) + dot(s_vecs[j], hs_vecs[i]));
                amat[(i, j)] = av;
                amat[(j, i)] = av;
            }
        }
        // Whiten against near-dependence in the subspace.
        let geig = gram.clone().symmetric_eigen();
        let gmax = geig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut tcols = Vec::new();
        for i in 0..m {
            if geig.eigenvalues[i] > 1e-12 * gmax {
                tcols.push(geig.eigenvectors.column(i) / geig.eigenvalues[i].sqrt());
            }
        }
        let mt = tcols.len();
        let mut t = nalgebra::DMatrix::zeros(m, mt);
        for (c, col) in tcols.iter().enumerate() {
            t.set_column(c, col);
        }
        let reduced = t.transpose() * &amat * &t;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = reduced.symmetric_eigen();
        let mut order: Vec<usize> = (0..mt).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let combine = |coef: &nalgebra::DVector<f64>, zero_x_block: bool| {
            let mut v = vec![0.0; n];
            let mut hv = vec![0.0; n];
            for (j, (sj, hsj)) in s_vecs.iter().zip(&hs_vecs).enumerate() {
                if zero_x_block && j < k {
                    continue;
                }
                let w = coef[j];
                if w != 0.0 {
                    v.iter_mut().zip(sj.iter()).for_each(|(vi, si)| *vi += w * si);
                    hv.iter_mut().zip(hsj.iter()).for_each(|(vi, si)| *vi += w * si);
                }
            }
            (v, hv)
        };

        let mut new_xs = Vec::with_capacity(k);
        let mut new_hxs = Vec::with_capacity(k);
        let mut new_ps = Vec::with_capacity(k);
        let mut new_hps = Vec::with_capacity(k);
        for c in 0..k.min(mt) {
            let coef: nalgebra::DVector<f64> = &t * eig.eigenvectors.column(order[c]);
            let (mut v, mut hv) = combine(&coef, false);
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            hv.iter_mut().for_each(|x| *x /= nv);
            new_xs.push(v);
            new_hxs.push(hv);
            let (mut p, mut hp) = combine(&coef, true);
            let np = norm(&p);
            if np > 1e-10 {
                p.iter_mut().for_each(|x| *x /= np);
                hp.iter_mut().for_each(|x| *x /= np);
                new_ps.push(p);
                new_hps.push(hp);
            }
        }
        xs = new_xs;
        hxs = new_hxs;
        ps = new_ps;
        hps = new_hps;
    }

    let residuals = residual_norms(op, &energies, &xs);
    let bounds = [tol, tol_excited];
    if residuals
        .iter()
        .enumerate()
        .any(|(i, &r)| r > 100.0 * bounds[i.min(1)] * scale)
    {
        return Err(CoreError::Numeric {
            what: "preconditioned_ground",
            msg: format!("residuals {residuals:?} after {iterations} iterations"),
        });
    }
    let degenerate = k >= 2 && (energies[1] - energies[0]).abs() < 1e-10 * scale;
    Ok(EigResult { energies, vectors: xs, residuals, iterations, degenerate })
}

/// Which Hamiltonian a sweep scans, with its fixed parameters. The control
/// variable is g²_elec for the pure gauge model and V for the two-body and
/// effective models.
#[derive(Debug, Clone, Copy)]
pub enum SweepHamiltonian {
    Qlm { g2_mag_inv: f64 },
    Imp { u: f64, j: f64 },
    Eff { u: f64, j: f64 },
}

/// Observables recorded per sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepObservable {
    /// ⟨Υ(π)⟩ on the string to the middle plaquette (or a chosen one).
    ThooftPi,
    /// Gauss-violation density (two-body model only).
    GaussDensity,
}

/// One sweep point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRecord {
    pub control: f64,
    pub e0: f64,
    pub gap: f64,
    pub observables: Vec<(String, f64)>,
    pub degenerate: bool,
    pub error: Option<String>,
}

/// Sweep configuration knobs.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub tol: f64,
    pub seed: u64,
    /// Reuse the previous ground vector as the next start (sequential mode).
    pub warm_start: bool,
    pub pair_mode: PairMode,
    pub signed_gauss: bool,
    pub string_convention: StringConvention,
    /// Target plaquette of the string observable; middle when none.
    pub target_plaquette: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            seed: 0x5eed,
            warm_start: true,
            pair_mode: PairMode::All,
            signed_gauss: true,
            string_convention: StringConvention::Alternating,
            target_plaquette: None,
        }
    }
}

enum SweepBasis {
    Gauge(GaugeBasis),
    Sector(WordBasis),
}

/// Ground state, gap, and requested observables per grid point.
///
/// Sequential mode reuses each ground vector to warm-start the next point;
/// failures are recorded per point without aborting the sweep.
pub fn sweep(
    kind: SweepHamiltonian,
    g: &LatticeGeometry,
    grid: &[f64],
    observables: &[SweepObservable],
    opts: SweepOptions,
) -> Result<Vec<SweepRecord>> {
    if grid.is_empty() {
        return Err(CoreError::Argument("sweep grid must be nonempty".into()));
    }
    let basis = match kind {
        SweepHamiltonian::Qlm { .. } | SweepHamiltonian::Eff { .. } => {
            SweepBasis::Gauge(model::gauge_basis_with(g, opts.signed_gauss)?)
        }
        SweepHamiltonian::Imp { .. } => {
            SweepBasis::Sector(model::magnetization_basis(g.n_links(), 0))
        }
    };
    if matches!(basis, SweepBasis::Gauge(_))
        && observables.contains(&SweepObservable::GaussDensity)
    {
        return Err(CoreError::BasisMismatch(
            "gauss density is identically zero on gauge-sector sweeps".into(),
        ));
    }
    let path = thooft_path(g, opts.target_plaquette.unwrap_or_else(|| middle_plaquette(g)))?;

    let mut records = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<Vec<f64>>> = None;
    for &control in grid {
        let point = sweep_point(kind, g, &basis, control, observables, &opts, &path, warm.as_deref());
        match point {
            Ok((record, ground)) => {
                if opts.warm_start {
                    warm = Some(ground);
                }
                records.push(record);
            }
            Err(e) => records.push(SweepRecord {
                control,
                e0: f64::NAN,
                gap: f64::NAN,
                observables: Vec::new(),
                degenerate: false,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    kind: SweepHamiltonian,
    g: &LatticeGeometry,
    basis: &SweepBasis,
    control: f64,
    observables: &[SweepObservable],
    opts: &SweepOptions,
    path: &crate::lattice::Path,
    warm: Option<&[Vec<f64>]>,
) -> Result<(SweepRecord, Vec<Vec<f64>>)> {
    let lanczos_opts = LanczosOptions { tol: opts.tol, seed: opts.seed, ..Default::default() };
    let (eig, words): (EigResult, WordBasis) = match (kind, basis) {
        (SweepHamiltonian::Qlm { g2_mag_inv }, SweepBasis::Gauge(gb)) => {
            let h = model::build_h_qlm(gb, control, g2_mag_inv)?;
            (solve_small(&h, lanczos_opts, warm.and_then(|w| w.first().map(Vec::as_slice)))?, gb.words.clone())
        }
        (SweepHamiltonian::Eff { u, j }, SweepBasis::Gauge(gb)) => {
            let h = model::build_h_eff(gb, control, u, j, opts.pair_mode)?;
            (solve_small(&h, lanczos_opts, warm.and_then(|w| w.first().map(Vec::as_slice)))?, gb.words.clone())
        }
        (SweepHamiltonian::Imp { u, j }, SweepBasis::Sector(words)) => {
            let op = HImpSectorOp::new(
                Arc::new(g.clone()),
                words.clone(),
                control,
                u,
                j,
                opts.pair_mode,
                opts.signed_gauss,
            );
            let eig =
                preconditioned_ground_with_start(&op, 2, opts.tol, opts.seed, 600, warm)?;
            (eig, words.clone())
        }
        _ => unreachable!("basis constructed per kind"),
    };

    let psi = StateVector::from_real(words, &eig.vectors[0])?;
    let mut obs = Vec::with_capacity(observables.len());
    for o in observables {
        match o {
            SweepObservable::ThooftPi => {
                let v = observe::expect_thooft(
                    &psi,
                    path,
                    std::f64::consts::PI,
                    opts.string_convention,
                )?;
                obs.push(("upsilon_pi".to_string(), v.re));
            }
            SweepObservable::GaussDensity => {
                obs.push(("gauss_density".to_string(), observe::gauss_density(&psi, g)?));
            }
        }
    }
    let record = SweepRecord {
        control,
        e0: eig.energies[0],
        gap: eig.gap().unwrap_or(f64::NAN),
        observables: obs,
        degenerate: eig.degenerate,
        error: None,
    };
    Ok((record, eig.vectors))
}

fn solve_small(
    h: &SparseOperator,
    opts: LanczosOptions,
    warm: Option<&[f64]>,
) -> Result<EigResult> {
    if h.dim() <= 24 {
        // Lanczos cannot resolve k=2 out of very small or fully degenerate
        // spaces reliably; dense is exact and cheap here.
        dense_eig(h)
    } else {
        lanczos_ground_with_start(h, 2, opts, warm)
    }
}

/// CSV rendering of sweep records: `control,E0,gap,<observables...>`, one
/// row per grid point, shortest round-trip float formatting.
pub fn sweep_to_csv(records: &[SweepRecord]) -> String {
    let mut header = vec!["control".to_string(), "E0".to_string(), "gap".to_string()];
    if let Some(first) = records.iter().find(|r| r.error.is_none()) {
        for (name, _) in &first.observables {
            header.push(name.clone());
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in records {
        let mut row = vec![format!("{}", r.control), format!("{}", r.e0), format!("{}", r.gap)];
        for (_, v) in &r.observables {
            row.push(format!("{v}"));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_ladder;
    use crate::sparse::{BasisTag, SparseBuilder};

    fn diagonal_op(values: &[f64]) -> SparseOperator {
        let mut b = SparseBuilder::new(values.len(), BasisTag::Full);
        for (i, &v) in values.iter().enumerate() {
            b.push_real(i, i, v);
        }
        b.finish(true)
    }

    #[test]
    fn dense_eig_basics() {
        let op = diagonal_op(&[3.0, 1.0, 2.0]);
        let r = dense_eig(&op).unwrap();
        assert_eq!(r.energies, vec![1.0, 2.0, 3.0]);
        let id = diagonal_op(&[1.0; 5]);
        let r = dense_eig(&id).unwrap();
        assert!(r.energies.iter().all(|&e| (e - 1.0).abs() < 1e-14));
        assert!(r.degenerate);
    }

    #[test]
    fn dense_eig_single_plaquette_qlm() {
        let g = crate::lattice::build_square(2, 2, crate::lattice::Boundary::Open).unwrap();
        let basis = model::gauge_basis(&g).unwrap();
        let h = model::build_h_qlm(&basis, 0.0, 1.0).unwrap();
        let r = dense_eig(&h).unwrap();
        let s = 4.0 * std::f64::consts::SQRT_2;
        for (got, expect) in r.energies.iter().zip([-s, 0.0, s]) {
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_minimum_of_diagonal() {
        let vals: Vec<f64> = (0..120).map(|i| ((i * 7919) % 1000) as f64 / 10.0).collect();
        let op = diagonal_op(&vals);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = lanczos_ground(&op, 1, LanczosOptions::default()).unwrap();
        assert!((r.energies[0] - min).abs() < 1e-9);
    }

    #[test]
    fn lanczos_matches_dense_on_ladder3() {
        let g = build_ladder(3).unwrap();
        let basis = model::gauge_basis(&g).unwrap();
        let h = model::build_h_eff(&basis, 1.0, 75.0, 1.0, PairMode::All).unwrap();
        let dense = dense_eig(&h).unwrap();
        let lz = lanczos_ground(&h, 2, LanczosOptions::default()).unwrap();
        assert!((lz.energies[0] - dense.energies[0]).abs() < 1e-10);
        // Variational bound.
        assert!(lz.energies[0] >= dense.energies[0] - 1e-9);
        for r in &lz.residuals {
            assert!(*r < 1e-8 * h.norm_estimate().max(1.0));
        }
    }

    #[test]
    fn lanczos_deterministic() {
        let g = build_ladder(3).unwrap();
        let basis = model::gauge_basis(&g).unwrap();
        let h = model::build_h_qlm(&basis, 0.3, 2.0 / 75.0).unwrap();
        let a = lanczos_ground(&h, 2, LanczosOptions::default()).unwrap();
        let b = lanczos_ground(&h, 2, LanczosOptions::default()).unwrap();
        assert_eq!(a.energies[0].to_bits(), b.energies[0].to_bits());
        assert_eq!(a.energies[1].to_bits(), b.energies[1].to_bits());
    }

    #[test]
    fn preconditioned_matches_lanczos() {
        let g = build_ladder(4).unwrap();
        let words = model::magnetization_basis(g.n_links(), 0);
        let op = HImpSectorOp::new(
            Arc::new(g),
            words,
            1.0,
            75.0,
            1.0,
            PairMode::All,
            true,
        );
        let pc = preconditioned_ground(&op, 2, 1e-10, 7, 600).unwrap();
        let lz = lanczos_ground(&op, 2, LanczosOptions { tol: 1e-10, ..Default::default() })
            .unwrap();
        assert!((pc.energies[0] - lz.energies[0]).abs() < 1e-8, "{:?} {:?}", pc.energies, lz.energies);
        assert!((pc.energies[1] - lz.energies[1]).abs() < 1e-7);
    }

    #[test]
    fn sweep_smoke_and_csv() {
        let g = build_ladder(3).unwrap();
        let grid = [0.1, 1.0, 10.0];
        let recs = sweep(
            SweepHamiltonian::Qlm { g2_mag_inv: 2.0 / 75.0 },
            &g,
            &grid,
            &[SweepObservable::ThooftPi],
            SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
        for r in &recs {
            assert!(r.error.is_none());
            assert!(r.gap > -1e-10);
        }
        // Υ(π) grows toward 1 with the electric coupling.
        let u: Vec<f64> = recs.iter().map(|r| r.observables[0].1).collect();
        assert!(u[2] > u[0]);
        assert!(u[2] > 0.9);
        let csv = sweep_to_csv(&recs);
        assert!(csv.starts_with("control,E0,gap,upsilon_pi\n"));
        assert_eq!(csv.lines().count(), 4);
        // Empty observable list still records energies.
        let recs2 = sweep(
            SweepHamiltonian::Qlm { g2_mag_inv: 2.0 / 75.0 },
            &g,
            &[1.0],
            &[],
            SweepOptions::default(),
        )
        .unwrap();
        assert!(recs2[0].observables.is_empty());
        assert!(sweep_to_csv(&recs2).starts_with("control,E0,gap\n"));
    }

    #[test]
    fn sweep_rejects_gauss_density_on_gauge_sector() {
        let g = build_ladder(3).unwrap();
        let r = sweep(
            SweepHamiltonian::Eff { u: 75.0, j: 1.0 },
            &g,
            &[0.5],
            &[SweepObservable::GaussDensity],
            SweepOptions::default(),
        );
        assert!(r.is_err());
    }
}
