//! Local fluxonium physics.
//!
//! Exact spectra of H = 4E_C n̂² + E_L φ̂²/2 − E_J cos(φ̂ + φ_off) in the
//! harmonic-oscillator eigenbasis of the quadratic part, localized qutrit
//! states obtained by rotating the near-degenerate flux doublet, and the
//! tight-binding closed forms valid for deep Josephson wells.
//!
//! All energies are in the caller's declared reference unit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::specfun::{laguerre, log_factorial};

/// One fluxonium's energies and offset phase; the atom of all derived physics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeviceParams {
    /// Charging energy E_C = e²/2C.
    pub e_c: f64,
    /// Josephson energy E_J.
    pub e_j: f64,
    /// Shunt inductive energy E_L.
    pub e_l: f64,
    /// Offset phase φ_off = 2π Φ_ext/Φ_0, in radians.
    pub phi_off: f64,
}

impl DeviceParams {
    pub fn new(e_c: f64, e_j: f64, e_l: f64, phi_off: f64) -> Result<Self> {
        if !(e_c > 0.0) || !(e_l > 0.0) || e_j < 0.0 {
            return Err(CoreError::Argument(format!(
                "device energies must satisfy e_c > 0, e_l > 0, e_j >= 0 (got e_c={e_c}, e_j={e_j}, e_l={e_l})"
            )));
        }
        Ok(Self { e_c, e_j, e_l, phi_off })
    }

    /// Whether the offset phase is one of the supported presets {0, π}.
    pub fn standard_offset(&self) -> bool {
        self.phi_off == 0.0 || self.phi_off == std::f64::consts::PI
    }

    /// Oscillator length β = (8E_C/E_L)^{1/4} of the quadratic part.
    pub fn beta(&self) -> f64 {
        (8.0 * self.e_c / self.e_l).powf(0.25)
    }

    /// Oscillator spacing ħω = √(8 E_L E_C) of the quadratic part.
    pub fn hbar_omega(&self) -> f64 {
        (8.0 * self.e_l * self.e_c).sqrt()
    }

    /// Zero-point phase spread σ = (8E_C/E_J)^{1/4} of a Josephson well.
    pub fn sigma(&self) -> Result<f64> {
        if self.e_j <= 0.0 {
            return Err(CoreError::Argument("sigma requires e_j > 0".into()));
        }
        Ok((8.0 * self.e_c / self.e_j).powf(0.25))
    }

    /// Same device with the inductive energy shifted by `delta` (the
    /// renormalization produced by inductive couplers).
    pub fn with_e_l_shift(&self, delta: f64) -> Result<Self> {
        Self::new(self.e_c, self.e_j, self.e_l + delta, self.phi_off)
    }
}

/// Eigenpairs of a device in the oscillator basis.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Device the spectrum was computed for.
    pub params: DeviceParams,
    /// Basis size D.
    pub dim: usize,
    /// Eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the oscillator basis.
    pub vectors: DMatrix<f64>,
    /// Oscillator length β used for the basis.
    pub beta: f64,
    /// Max |ΔE| of the lowest 5 levels between bases of size D and D−20.
    pub convergence_gap: f64,
    /// Whether `convergence_gap` is below 1e-6.
    pub converged: bool,
}

/// Localized qutrit states and operator matrix elements of a φ_off = 0 device.
///
/// Index order in the element matrices: 0 ↦ |0⟩, 1 ↦ |+1⟩, 2 ↦ |−1⟩, 3 ↦ |s⟩.
#[derive(Debug, Clone)]
pub struct QutritData {
    /// Energies {E_0, E_+1, E_−1} of the localized states.
    pub energies: [f64; 3],
    /// Localized state vectors |0⟩, |+1⟩, |−1⟩ in the oscillator basis.
    pub states: [DVector<f64>; 3],
    /// Eigenstate index of |s⟩, the first level above the doublet.
    pub s_index: usize,
    /// Energy of |s⟩.
    pub s_energy: f64,
    /// ⟨i|φ̂|j⟩ over {|0⟩, |+1⟩, |−1⟩, |s⟩} (radians).
    pub phi_elements: [[f64; 4]; 4],
    /// ⟨i|n̂|j⟩ over the same states; Hermitian with imaginary off-diagonals.
    pub charge_elements: [[Complex64; 4]; 4],
    /// V = (E_+1 + E_−1)/2 − E_0.
    pub splitting_v: f64,
    /// Exact eigen-splitting of the doublet, |E_2 − E_1|.
    pub doublet_splitting: f64,
}

/// Tight-binding quantities of a deep-well device.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TightBinding {
    /// Zero-point spread σ = (8E_C/E_J)^{1/4}.
    pub sigma: f64,
    /// Nearest-neighbor hopping t (negative near the extremum σ ≈ 3.17).
    pub hopping_t: f64,
    /// Band gap ħω₀ = √(8 E_C E_J).
    pub band_gap: f64,
}

/// φ̂ = β(a+a†)/√2 in the oscillator basis.
pub fn phi_matrix(beta: f64, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let c = beta / std::f64::consts::SQRT_2;
    for n in 0..dim - 1 {
        let v = c * ((n + 1) as f64).sqrt();
        m[(n, n + 1)] = v;
        m[(n + 1, n)] = v;
    }
    m
}

/// Real antisymmetric A with n̂ = iA, A = (a† − a)/(√2 β).
pub fn charge_antisym_matrix(beta: f64, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let c = 1.0 / (std::f64::consts::SQRT_2 * beta);
    for n in 0..dim - 1 {
        let v = c * ((n + 1) as f64).sqrt();
        m[(n + 1, n)] = v; // ⟨n+1|A|n⟩ from a†
        m[(n, n + 1)] = -v; // ⟨n|A|n+1⟩ from −a
    }
    m
}

// ⟨ψ_m|cos φ̂|ψ_n⟩ (even m+n) and ⟨ψ_m|sin φ̂|ψ_n⟩ (odd m+n) via the
// Laguerre closed forms; zero otherwise.
fn trig_element(m: usize, n: usize, beta: f64, sine: bool) -> f64 {
    let d = m.abs_diff(n);
    if (m + n) % 2 != usize::from(sine) {
        return 0.0;
    }
    let lo = m.min(n) as u32;
    let hi = m.max(n) as u32;
    let log_pref = 0.5 * (log_factorial(lo) - log_factorial(hi))
        + d as f64 * (beta / std::f64::consts::SQRT_2).ln()
        - beta * beta / 4.0;
    let lag = laguerre(lo, d as u32, beta * beta / 2.0);
    let sign = if sine {
        if ((d - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 }
    } else if (d / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    sign * log_pref.exp() * lag
}

/// Matrix of H = 4E_C n̂² + E_L φ̂²/2 − E_J cos(φ̂ + φ_off) in the oscillator
/// eigenbasis of the quadratic part.
///
/// The quadratic part is diagonal, ħω(n + 1/2) with ħω = √(8 E_L E_C). The
/// Josephson part decomposes as cos(φ_off)·(−E_J cos φ̂) + sin(φ_off)·(E_J sin φ̂),
/// so only the two Laguerre element tables are needed for any offset.
pub fn ho_matrix(p: &DeviceParams, dim: usize) -> Result<DMatrix<f64>> {
    if dim < 3 {
        return Err(CoreError::Argument(format!("basis size must be >= 3, got {dim}")));
    }
    let beta = p.beta();
    let hw = p.hbar_omega();
    let (c_off, s_off) = (p.phi_off.cos(), p.phi_off.sin());
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        h[(n, n)] = hw * (n as f64 + 0.5);
    }
    if p.e_j != 0.0 {
        for m in 0..dim {
            for n in m..dim {
                let j = if (m + n) % 2 == 0 {
                    -p.e_j * c_off * trig_element(m, n, beta, false)
                } else {
                    p.e_j * s_off * trig_element(m, n, beta, true)
                };
                if j != 0.0 {
                    h[(m, n)] += j;
                    if m != n {
                        h[(n, m)] += j;
                    }
                }
            }
        }
    }
    Ok(h)
}

fn eig_sorted(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let dim = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // Deterministic sign: first component of significant magnitude positive.
        if let Some(lead) = v.iter().find(|x| x.abs() > 1e-8) {
            if *lead < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    (energies, vectors)
}

/// Full eigendecomposition of `ho_matrix`, with a convergence check against
/// the basis of size dim − 20.
pub fn spectrum(p: &DeviceParams, dim: usize) -> Result<Spectrum> {
    let h = ho_matrix(p, dim)?;
    let (energies, vectors) = eig_sorted(&h);
    let (convergence_gap, converged) = if dim >= 23 {
        let h_small = ho_matrix(p, dim - 20)?;
        let (e_small, _) = eig_sorted(&h_small);
        let levels = 5.min(e_small.len());
        let gap = (0..levels)
            .map(|i| (energies[i] - e_small[i]).abs())
            .fold(0.0_f64, f64::max);
        (gap, gap < 2e-6)
    } else {
        (f64::INFINITY, false)
    };
    Ok(Spectrum { params: *p, dim, energies, vectors, beta: p.beta(), convergence_gap, converged })
}

/// Localized qutrit construction for a φ_off = 0 device.
///
/// |0⟩ is the ground state. The two near-degenerate eigenstates above it are
/// parity cats; the returned |±1⟩ are the orthonormal combinations that
/// diagonalize φ̂ restricted to that doublet, labeled by the sign of ⟨φ̂⟩.
/// |s⟩ is the next eigenstate above the doublet.
pub fn qutrit_states(s: &Spectrum) -> Result<QutritData> {
    if s.params.phi_off != 0.0 {
        return Err(CoreError::Argument(format!(
            "qutrit construction requires phi_off = 0, got {}",
            s.params.phi_off
        )));
    }
    if s.dim < 4 {
        return Err(CoreError::Argument("need at least 4 levels for the qutrit layout".into()));
    }
    let doublet_splitting = s.energies[2] - s.energies[1];
    let guard_gap = s.energies[3] - s.energies[2];
    if guard_gap < 10.0 * doublet_splitting {
        return Err(CoreError::Degeneracy(format!(
            "doublet (split {doublet_splitting:.3e}) not separated from level 3 (gap {guard_gap:.3e}) by 10x"
        )));
    }

    let phi = phi_matrix(s.beta, s.dim);
    let v0 = s.vectors.column(0).clone_owned();
    let v1 = s.vectors.column(1).clone_owned();
    let v2 = s.vectors.column(2).clone_owned();
    let vs = s.vectors.column(3).clone_owned();

    // Diagonalize φ̂ in the doublet span.
    let p11 = (v1.transpose() * &phi * &v1)[(0, 0)];
    let p12 = (v1.transpose() * &phi * &v2)[(0, 0)];
    let p22 = (v2.transpose() * &phi * &v2)[(0, 0)];
    let theta = 0.5 * (2.0 * p12).atan2(p11 - p22);
    let (c, sn) = (theta.cos(), theta.sin());
    let ua = &v1 * c + &v2 * sn;
    let ub = &v2 * c - &v1 * sn;
    let phi_a = (ua.transpose() * &phi * &ua)[(0, 0)];
    let (plus, minus) = if phi_a >= 0.0 { (ua, ub) } else { (ub, ua) };

    let e1 = s.energies[1];
    let e2 = s.energies[2];
    // ⟨±|H|±⟩ from the rotation weights on the exact eigenstates.
    let w_plus = |v: &DVector<f64>| {
        let a = v.dot(&s.vectors.column(1).clone_owned());
        let b = v.dot(&s.vectors.column(2).clone_owned());
        a * a * e1 + b * b * e2
    };
    let e_plus = w_plus(&plus);
    let e_minus = w_plus(&minus);

    let states = [v0, plus, minus];
    let basis: [&DVector<f64>; 4] = [&states[0], &states[1], &states[2], &vs];

    let a = charge_antisym_matrix(s.beta, s.dim);
    let mut phi_elements = [[0.0; 4]; 4];
    let mut charge_elements = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            phi_elements[i][j] = (basis[i].transpose() * &phi * basis[j])[(0, 0)];
            let im = (basis[i].transpose() * &a * basis[j])[(0, 0)];
            charge_elements[i][j] = Complex64::new(0.0, im);
        }
    }

    let e0 = s.energies[0];
    Ok(QutritData {
        energies: [e0, e_plus, e_minus],
        states,
        s_index: 3,
        s_energy: s.energies[3],
        phi_elements,
        charge_elements,
        splitting_v: 0.5 * (e_plus + e_minus) - e0,
        doublet_splitting,
    })
}

/// Tight-binding closed forms: σ, hopping t, and the band gap ħω₀.
pub fn tb_quantities(p: &DeviceParams) -> Result<TightBinding> {
    let sigma = p.sigma()?;
    let s2 = sigma * sigma;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let t = p.e_j * (-pi2 / s2).exp() * (s2 / 4.0 - pi2 / 2.0 + (-s2 / 4.0).exp());
    Ok(TightBinding { sigma, hopping_t: t, band_gap: (8.0 * p.e_c * p.e_j).sqrt() })
}

/// Wannier matrix element ⟨m1|Ĥ^J|m2⟩ of the Josephson term between wells.
pub fn tb_hj_element(m1: i32, m2: i32, p: &DeviceParams) -> Result<f64> {
    let sigma = p.sigma()?;
    let s2 = sigma * sigma;
    let pi = std::f64::consts::PI;
    let dm = (m1 - m2) as f64;
    Ok(p.e_j
        * (-pi * pi * dm * dm / s2).exp()
        * (s2 / 4.0 - pi * pi * dm * dm / 2.0 - (-s2 / 4.0).exp() * (pi * (m1 + m2) as f64).cos()))
}

/// Wannier charge element ⟨m1|n̂|m2⟩ = (i/σ²) π (m1−m2) e^{−π²(m1−m2)²/σ²}.
pub fn tb_charge_element(m1: i32, m2: i32, sigma: f64) -> Result<Complex64> {
    if !(sigma > 0.0) {
        return Err(CoreError::Argument(format!("sigma must be > 0, got {sigma}")));
    }
    let pi = std::f64::consts::PI;
    let dm = (m1 - m2) as f64;
    let s2 = sigma * sigma;
    Ok(Complex64::new(0.0, pi * dm / s2 * (-pi * pi * dm * dm / s2).exp()))
}
