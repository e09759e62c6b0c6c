//! Coupled-circuit derivations: capacitance-matrix inversion on the link
//! lattice, the model constants {Δ, U, V, J} from device spectra, the
//! drive-induced Stark shifts that tune the electric splitting, and the
//! decoherence budget.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::{self, DeviceParams, QutritData, Spectrum};
use crate::error::{CoreError, Result};
use crate::specfun::{bessel_k0, elliptic_k};

/// Capacitive coupling strength, given either as ξ = √(C_c/C) or directly as
/// the coupling energy E^c_C.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum CapCoupling {
    Xi(f64),
    Ecc(f64),
}

/// Which ⟨1|n̂|0⟩ enters the flip-flop coupling J.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeSource {
    Exact,
    TightBinding,
}

/// Circuit parameters of one link/ancilla pair plus the coupler energies.
#[derive(Debug, Clone, Copy)]
pub struct NetworkParams {
    pub link: DeviceParams,
    pub ancilla: DeviceParams,
    /// Coupling inductive energy E^c_L.
    pub e_cl: f64,
    pub coupling: CapCoupling,
}

/// Intermediate matrix elements behind a derived coupling set, kept so the
/// provenance of each constant is inspectable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplingProvenance {
    /// |⟨g|φ̂_a|e⟩| of the shifted ancilla.
    pub phi_ge: f64,
    /// ⟨+1|φ̂|+1⟩ of the shifted link.
    pub phi_m1: f64,
    /// |⟨1|n̂|0⟩| actually used for J.
    pub n10: f64,
    /// Exact |⟨1|n̂|0⟩| from the localized qutrit states.
    pub n10_exact: f64,
    /// Tight-binding |⟨1|n̂|0⟩| closed form.
    pub n10_tight_binding: f64,
    /// Doublet eigen-splitting of the link.
    pub doublet_splitting: f64,
    /// Nearest-neighbor capacitive energy E^c_C used for J.
    pub e_cc: f64,
    pub charge_source: ChargeSource,
    pub basis_dim: usize,
}

/// Derived model constants {Δ, U, V, J, g²_elec, 1/g²_mag}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplingSet {
    /// Ancilla qubit splitting Δ = E_e − E_g (inductive shift included).
    pub delta: f64,
    /// Gauss penalty U = E^c_L² |⟨g|φ̂_a|e⟩|² |⟨φ̂⟩_{m=1}|² / Δ.
    pub u: f64,
    /// Electric splitting V of the shifted link qutrit.
    pub v: f64,
    /// Flip-flop coupling J = −8 E^c_C |⟨1|n̂|0⟩|² ≤ 0.
    pub j: f64,
    /// g²_elec = V + 2J²/U.
    pub g2_elec: f64,
    /// 1/g²_mag = 2J²/U.
    pub g2_mag_inv: f64,
    /// g²_elec · g²_mag (infinite when the Gauss constraint is absent).
    pub product: f64,
    /// False when E^c_L = 0: no Gauss constraint is generated.
    pub gauss_active: bool,
    pub provenance: CouplingProvenance,
}

/// Per-state drive parameters for the off-resonant coupling to |s⟩.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriveParams {
    /// Drive frequency ω_F.
    pub omega_f: f64,
    /// Coupling strength g (real by phase convention).
    pub g_strength: f64,
    /// Rabi frequency Ω = −g⟨s|φ̂|0⟩.
    pub rabi: f64,
    /// Detuning δ = ω_F − (E_s − E_0).
    pub detuning: f64,
}

impl DriveParams {
    /// Assemble drive parameters against a device's qutrit data.
    pub fn new(omega_f: f64, g_strength: f64, q: &QutritData) -> Self {
        let rabi = -g_strength * q.phi_elements[3][0];
        let detuning = omega_f - (q.s_energy - q.energies[0]);
        Self { omega_f, g_strength, rabi, detuning }
    }
}

/// Search box for the drive optimization.
#[derive(Debug, Clone, Copy)]
pub struct DriveBounds {
    /// Inclusive range of ω_F.
    pub omega: (f64, f64),
    /// Inclusive range of |g|².
    pub g2: (f64, f64),
}

/// Per-state Stark shifts and the resulting effective splitting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StarkShifts {
    /// Shifts for {|0⟩, |+1⟩, |−1⟩}.
    pub shifts: [f64; 3],
    /// V' = V + shift_0 − (shift_+1 + shift_−1)/2.
    pub v_prime: f64,
}

/// Decoherence budget of an adiabatic sweep at the minimum gap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecoherenceBudget {
    /// Minimum many-body gap 8J²/U, in the coupling set's energy unit.
    pub gap_min: f64,
    /// Sweep time T_sim = 2/gap (seconds; infinite when J = 0).
    pub t_sim: f64,
    /// Per-ancilla error 1 − e^{−T_sim/T₁ᵃ}.
    pub ancilla_error: f64,
    /// Largest supported lattice under a 10% total-error budget.
    pub max_links: u64,
    /// True when J = 0 makes the sweep time infinite.
    pub gap_closed: bool,
}

/// Capacitance kernel D(k)/C = 1 + 4ξ² − 2ξ²(cos kx + cos ky).
pub fn cap_kernel(kx: f64, ky: f64, xi: f64) -> f64 {
    1.0 + 4.0 * xi * xi - 2.0 * xi * xi * (kx.cos() + ky.cos())
}

/// Inverse-capacitance element c(Δx) in units of 1/C, by Brillouin-zone
/// quadrature of 1/D(k).
///
/// The integrand is smooth and periodic, so the uniform grid sum converges
/// geometrically; the grid is doubled until successive values agree to 1e-8
/// relative.
pub fn cap_inverse(dx: (i64, i64), xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(CoreError::Argument(format!("xi must be > 0, got {xi}")));
    }
    let eval = |n: usize| -> (f64, f64) {
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for ix in 0..n {
            let kx = step * ix as f64;
            let px = kx * dx.0 as f64;
            for iy in 0..n {
                let ky = step * iy as f64;
                let w = 1.0 / cap_kernel(kx, ky, xi);
                let phase = px + ky * dx.1 as f64;
                re += w * phase.cos();
                im += w * phase.sin();
            }
        }
        let norm = (n * n) as f64;
        (re / norm, im / norm)
    };
    let mut n = 32usize;
    let (mut prev, _) = eval(n);
    loop {
        n *= 2;
        let (val, im) = eval(n);
        if im.abs() > 1e-10 * val.abs().max(1e-300) {
            return Err(CoreError::Numeric {
                what: "cap_inverse",
                msg: format!("imaginary residue {im:.3e} at grid {n}"),
            });
        }
        if (val - prev).abs() <= 1e-8 * val.abs() || n >= 4096 {
            if n >= 4096 && (val - prev).abs() > 1e-8 * val.abs() {
                return Err(CoreError::Numeric {
                    what: "cap_inverse",
                    msg: format!("quadrature not converged at grid {n} (xi = {xi})"),
                });
            }
            return Ok(val);
        }
        prev = val;
    }
}

/// Closed form for the on-site element c(0) = 2K(−16ξ²/(ξ⁻²+8))/(πξ√(ξ⁻²+8)).
pub fn cap_c0_closed(xi: f64) -> Result<f64> {
    let inv2 = 1.0 / (xi * xi);
    let k = elliptic_k(-16.0 * xi * xi / (inv2 + 8.0))?;
    Ok(2.0 * k / (std::f64::consts::PI * xi * (inv2 + 8.0).sqrt()))
}

/// Closed form for the off-site tail c(|Δx| > 0) ≈ K₀(|Δx|/ξ)/(2πξ²).
pub fn cap_tail_closed(r: f64, xi: f64) -> Result<f64> {
    Ok(bessel_k0(r / xi)? / (2.0 * std::f64::consts::PI * xi * xi))
}

/// E^c_C/E_C = √(8+ξ⁻²) K₀(ξ⁻¹) / (4ξ K(−16ξ²/(8+ξ⁻²))), i.e. c(1)/c(0)
/// via the closed forms.
pub fn ecc_ratio(xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(CoreError::Argument(format!("xi must be > 0, got {xi}")));
    }
    let inv2 = 1.0 / (xi * xi);
    let k = elliptic_k(-16.0 * xi * xi / (8.0 + inv2))?;
    Ok((8.0 + inv2).sqrt() * bessel_k0(1.0 / xi)? / (4.0 * xi * k))
}

/// Invert `ecc_ratio` for ξ by bisection (the ratio is monotone increasing).
pub fn xi_from_ecc_ratio(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(CoreError::Argument(format!("ratio must be > 0, got {ratio}")));
    }
    let (mut lo, mut hi) = (1e-3, 1e3);
    if ecc_ratio(hi)? < ratio {
        return Err(CoreError::Argument(format!(
            "E^c_C/E_C = {ratio} not attainable by the nearest-neighbor closed form"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ecc_ratio(mid)? < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derive the model constants from circuit parameters.
///
/// The coupler shifts are applied first (E_L → E_L + 2E^c_L on links,
/// E^a_L → E^a_L + 4E^c_L on the ancilla), then both devices are
/// diagonalized in a basis of size `dim` and the formulas
/// U = E^c_L²|⟨g|φ̂_a|e⟩|²|⟨φ̂⟩₁|²/Δ and J = −8E^c_C|⟨1|n̂|0⟩|² are
/// evaluated on the resulting states.
pub fn derive_couplings(np: &NetworkParams, dim: usize) -> Result<CouplingSet> {
    derive_couplings_with(np, dim, ChargeSource::Exact)
}

pub fn derive_couplings_with(
    np: &NetworkParams,
    dim: usize,
    charge_source: ChargeSource,
) -> Result<CouplingSet> {
    if np.link.phi_off != 0.0 {
        return Err(CoreError::Argument("link device must have phi_off = 0".into()));
    }
    if (np.ancilla.phi_off - std::f64::consts::PI).abs() > 1e-12 {
        return Err(CoreError::Argument("ancilla device must have phi_off = pi".into()));
    }
    if np.e_cl < 0.0 {
        return Err(CoreError::Argument("e_cl must be >= 0".into()));
    }

    let link = np.link.with_e_l_shift(2.0 * np.e_cl)?;
    let ancilla = np.ancilla.with_e_l_shift(4.0 * np.e_cl)?;
    let link_spec = device::spectrum(&link, dim)?;
    let anc_spec = device::spectrum(&ancilla, dim)?;
    let q = device::qutrit_states(&link_spec)?;

    let delta = anc_spec.energies[1] - anc_spec.energies[0];
    if !(delta > 0.0) {
        return Err(CoreError::Degeneracy(format!("ancilla splitting must be > 0, got {delta}")));
    }
    let phi_a = device::phi_matrix(anc_spec.beta, anc_spec.dim);
    let g_vec = anc_spec.vectors.column(0);
    let e_vec = anc_spec.vectors.column(1);
    let phi_ge = (g_vec.transpose() * &phi_a * e_vec)[(0, 0)].abs();

    let e_cc = match np.coupling {
        CapCoupling::Ecc(e) => e,
        CapCoupling::Xi(xi) => np.link.e_c * ecc_ratio(xi)?,
    };

    let n10_exact = q.charge_elements[1][0].norm();
    let n10_tb = device::tb_charge_element(1, 0, link.sigma()?)?.norm();
    let n10 = match charge_source {
        ChargeSource::Exact => n10_exact,
        ChargeSource::TightBinding => n10_tb,
    };

    let phi_m1 = q.phi_elements[1][1];
    let v = q.splitting_v;
    let u = np.e_cl * np.e_cl * phi_ge * phi_ge * phi_m1 * phi_m1 / delta;
    let j = -8.0 * e_cc * n10 * n10;
    let gauss_active = u > 0.0;
    let g2_mag_inv = if gauss_active { 2.0 * j * j / u } else { 0.0 };
    let g2_elec = v + g2_mag_inv;
    let product = if g2_mag_inv > 0.0 { g2_elec / g2_mag_inv } else { f64::INFINITY };

    Ok(CouplingSet {
        delta,
        u,
        v,
        j,
        g2_elec,
        g2_mag_inv,
        product,
        gauss_active,
        provenance: CouplingProvenance {
            phi_ge,
            phi_m1,
            n10,
            n10_exact,
            n10_tight_binding: n10_tb,
            doublet_splitting: q.doublet_splitting,
            e_cc,
            charge_source,
            basis_dim: dim,
        },
    })
}

/// Included excited levels: index above the doublet, capped at 20, with a
/// matrix-element floor of 1e-6 β² on |⟨s'|φ̂|i⟩|².
const STARK_LEVEL_CAP: usize = 20;
const STARK_ELEMENT_FLOOR: f64 = 1e-6;

fn stark_levels<'a>(
    q: &'a QutritData,
    spectrum: &'a Spectrum,
) -> Vec<(usize, f64, [f64; 3])> {
    let phi = device::phi_matrix(spectrum.beta, spectrum.dim);
    let floor = STARK_ELEMENT_FLOOR * spectrum.beta * spectrum.beta;
    let top = STARK_LEVEL_CAP.min(spectrum.dim - 1);
    let mut out = Vec::new();
    for sp in q.s_index..=top {
        let vs = spectrum.vectors.column(sp).clone_owned();
        let mut els = [0.0; 3];
        let mut keep = false;
        for (slot, vec) in q.states.iter().enumerate() {
            let el = (vec.transpose() * &phi * &vs)[(0, 0)];
            els[slot] = el;
            if el * el >= floor {
                keep = true;
            }
        }
        if keep {
            out.push((sp, spectrum.energies[sp], els));
        }
    }
    out
}

/// Per-state AC-Stark shifts from off-resonant coupling to the excited
/// levels, and the effective electric splitting V'.
///
/// shift_i = Σ_{s'} |g ⟨s'|φ̂|i⟩|² / (4 δ_{i,s'}) with
/// δ_{i,s'} = ω_F − (E_{s'} − E_i).
pub fn stark_shift(q: &QutritData, spectrum: &Spectrum, d: &DriveParams) -> Result<StarkShifts> {
    let levels = stark_levels(q, spectrum);
    let floor = 1e-6 * spectrum.params.e_j;
    let g2 = d.g_strength * d.g_strength;
    let energies = [q.energies[0], q.energies[1], q.energies[2]];
    let mut shifts = [0.0; 3];
    for (slot, &e_i) in energies.iter().enumerate() {
        let mut acc = 0.0;
        for &(sp, e_sp, els) in &levels {
            let el = els[slot];
            if el * el < STARK_ELEMENT_FLOOR * spectrum.beta * spectrum.beta {
                continue;
            }
            let delta = d.omega_f - (e_sp - e_i);
            if delta.abs() < floor {
                return Err(CoreError::Resonance(format!(
                    "drive resonant with level {sp} from qutrit state {slot}: |delta| = {:.3e}",
                    delta.abs()
                )));
            }
            acc += g2 * el * el / (4.0 * delta);
        }
        shifts[slot] = acc;
    }
    let v_prime = q.splitting_v + shifts[0] - 0.5 * (shifts[1] + shifts[2]);
    Ok(StarkShifts { shifts, v_prime })
}

/// Grid search plus local refinement minimizing |V'| over the drive box.
///
/// Points whose smallest included detuning falls below `resonance_floor` are
/// infeasible. Ties break deterministically toward the lowest ω_F, then the
/// lowest |g|², so the result is independent of evaluation order.
pub fn optimize_drive(
    q: &QutritData,
    spectrum: &Spectrum,
    bounds: &DriveBounds,
    resonance_floor: f64,
) -> Result<(DriveParams, StarkShifts)> {
    if bounds.omega.1 < bounds.omega.0 || bounds.g2.1 < bounds.g2.0 || bounds.g2.0 < 0.0 {
        return Err(CoreError::Argument("drive bounds must be non-empty with g2 >= 0".into()));
    }
    let levels = stark_levels(q, spectrum);
    let energies = [q.energies[0], q.energies[1], q.energies[2]];

    let feasible = |omega: f64| -> bool {
        levels.iter().all(|&(_, e_sp, els)| {
            (0..3).all(|slot| {
                let el = els[slot];
                el * el < STARK_ELEMENT_FLOOR * spectrum.beta * spectrum.beta
                    || (omega - (e_sp - energies[slot])).abs() >= resonance_floor
            })
        })
    };
    let v_prime = |omega: f64, g2: f64| -> f64 {
        let mut shifts = [0.0; 3];
        for (slot, &e_i) in energies.iter().enumerate() {
            for &(_, e_sp, els) in &levels {
                let el = els[slot];
                if el * el < STARK_ELEMENT_FLOOR * spectrum.beta * spectrum.beta {
                    continue;
                }
                shifts[slot] += g2 * el * el / (4.0 * (omega - (e_sp - e_i)));
            }
        }
        q.splitting_v + shifts[0] - 0.5 * (shifts[1] + shifts[2])
    };

    let scan = |o_lo: f64, o_hi: f64, g_lo: f64, g_hi: f64, n_o: usize, n_g: usize| {
        let mut best: Option<(f64, f64, f64)> = None; // (|v'|, omega, g2)
        for io in 0..n_o {
            let omega = if n_o == 1 {
                o_lo
            } else {
                o_lo + (o_hi - o_lo) * io as f64 / (n_o - 1) as f64
            };
            if !feasible(omega) {
                continue;
            }
            for ig in 0..n_g {
                let g2 = if n_g == 1 {
                    g_lo
                } else {
                    g_lo + (g_hi - g_lo) * ig as f64 / (n_g - 1) as f64
                };
                let score = v_prime(omega, g2).abs();
                let better = match best {
                    None => true,
                    Some((s, o, g)) => {
                        score < s - 1e-15
                            || (score <= s + 1e-15 && (omega < o || (omega == o && g2 < g)))
                    }
                };
                if better {
                    best = Some((score, omega, g2));
                }
            }
        }
        best
    };

    let mut best = scan(bounds.omega.0, bounds.omega.1, bounds.g2.0, bounds.g2.1, 161, 81)
        .ok_or_else(|| {
            CoreError::Optimization("no feasible drive point within the bounds".into())
        })?;
    let mut o_win = bounds.omega.1 - bounds.omega.0;
    let mut g_win = bounds.g2.1 - bounds.g2.0;
    for _ in 0..4 {
        o_win *= 0.05;
        g_win *= 0.05;
        let (_, o, g) = best;
        let o_lo = (o - o_win).max(bounds.omega.0);
        let o_hi = (o + o_win).min(bounds.omega.1);
        let g_lo = (g - g_win).max(bounds.g2.0);
        let g_hi = (g + g_win).min(bounds.g2.1);
        if let Some(b) = scan(o_lo, o_hi, g_lo, g_hi, 41, 21) {
            if b.0 <= best.0 {
                best = b;
            }
        }
    }

    let (_, omega, g2) = best;
    let drive = DriveParams::new(omega, g2.sqrt(), q);
    let shifts = stark_shift(q, spectrum, &drive)?;
    Ok((drive, shifts))
}

/// Adiabatic-sweep decoherence budget at the minimum gap 8J²/U.
///
/// `energy_unit_hz` converts the coupling set's energy unit to Hz. The
/// supported lattice size is the largest spin count keeping the total
/// expected ancilla error below 10%.
pub fn decoherence_budget(
    cs: &CouplingSet,
    energy_unit_hz: f64,
    t1_ancilla: f64,
) -> Result<DecoherenceBudget> {
    if !(energy_unit_hz > 0.0) || !(t1_ancilla > 0.0) {
        return Err(CoreError::Argument("energy_unit_hz and t1_ancilla must be > 0".into()));
    }
    let gap_min = if cs.u > 0.0 { 8.0 * cs.j * cs.j / cs.u } else { 0.0 };
    if gap_min == 0.0 {
        return Ok(DecoherenceBudget {
            gap_min: 0.0,
            t_sim: f64::INFINITY,
            ancilla_error: 1.0,
            max_links: 0,
            gap_closed: true,
        });
    }
    let t_sim = 2.0 / (gap_min * energy_unit_hz);
    let ancilla_error = 1.0 - (-t_sim / t1_ancilla).exp();
    let max_links = (0.1 / ancilla_error).floor() as u64;
    Ok(DecoherenceBudget { gap_min, t_sim, ancilla_error, max_links, gap_closed: false })
}

/// Charge-basis helper for tests and the CLI: ⟨1|n̂|0⟩ magnitude used for J.
pub fn coupling_n10(cs: &CouplingSet) -> Complex64 {
    Complex64::new(0.0, cs.provenance.n10)
}

/// The strong-coupling circuit preset, in units of the ancilla Josephson
/// energy: E_J = E^a_C = 0.2, E_C = 0.06, E^c_C = 0.04, E^a_L = 0.01,
/// E_L = 0.003, E^c_L = 0.0002.
pub fn strong_coupling_preset() -> NetworkParams {
    NetworkParams {
        link: DeviceParams { e_c: 0.06, e_j: 0.2, e_l: 0.003, phi_off: 0.0 },
        ancilla: DeviceParams { e_c: 0.2, e_j: 1.0, e_l: 0.01, phi_off: std::f64::consts::PI },
        e_cl: 0.0002,
        coupling: CapCoupling::Ecc(0.04),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert!((cap_kernel(0.0, 0.0, 0.7) - 1.0).abs() < 1e-15);
        let xi = 0.6_f64;
        assert!((cap_kernel(std::f64::consts::PI, std::f64::consts::PI, xi)
            - (1.0 + 8.0 * xi * xi))
            .abs()
            < 1e-12);
        assert!((cap_kernel(std::f64::consts::PI, 0.0, 0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cap_inverse_weak_coupling_limit() {
        let c = cap_inverse((0, 0), 1e-3).unwrap();
        assert!((c - 1.0).abs() < 1e-5);
    }

    #[test]
    fn cap_c0_closed_vs_quadrature() {
        for &xi in &[0.2, 0.5, 1.0] {
            let quad = cap_inverse((0, 0), xi).unwrap();
            let closed = cap_c0_closed(xi).unwrap();
            assert!(
                (quad - closed).abs() <= 1e-6 * closed,
                "xi={xi}: quad={quad} closed={closed}"
            );
        }
    }

    #[test]
    fn cap_tail_closed_vs_quadrature() {
        // The K0 form is a continuum approximation: good at the nearest
        // neighbor once xi ≳ 1, and over several sites for xi ≳ 2.
        let quad = cap_inverse((1, 0), 1.0).unwrap();
        let closed = cap_tail_closed(1.0, 1.0).unwrap();
        assert!((quad - closed).abs() <= 0.02 * quad, "quad={quad} closed={closed}");
        let quad = cap_inverse((3, 0), 2.0).unwrap();
        let closed = cap_tail_closed(3.0, 2.0).unwrap();
        assert!((quad - closed).abs() <= 0.05 * quad, "quad={quad} closed={closed}");
    }

    #[test]
    fn cap_tail_continuum_breakdown_below_unit_xi() {
        // Sub-lattice correlation length: the lattice decay constant is
        // acosh(1 + 1/2ξ²) while the continuum form assumes 1/ξ, so the K0
        // form underestimates the tail by ~e^{(1/ξ−κ)r}.
        let (xi, r) = (0.3_f64, 3i64);
        let quad = cap_inverse((r, 0), xi).unwrap();
        let closed = cap_tail_closed(r as f64, xi).unwrap();
        let kappa = (1.0 + 1.0 / (2.0 * xi * xi)).acosh();
        let envelope = ((1.0 / xi - kappa) * r as f64).exp();
        let ratio = quad / closed;
        assert!(ratio > 2.0, "continuum form should fail here, ratio = {ratio}");
        assert!(ratio < 2.0 * envelope && ratio > envelope / 2.0, "ratio={ratio} env={envelope}");
    }

    #[test]
    fn cap_inverse_decay_envelope() {
        let xi = 0.5;
        let c0 = cap_inverse((0, 0), xi).unwrap();
        for &r in &[2i64, 3, 4] {
            let c = cap_inverse((r, 0), xi).unwrap();
            assert!(c / c0 < (-(r as f64) / xi + 1.0).exp(), "r={r}");
        }
    }

    #[test]
    fn ecc_ratio_behaviour() {
        // Exponential suppression as xi → 0.
        assert!(ecc_ratio(0.05).unwrap() < 1e-6);
        assert!(ecc_ratio(0.02).unwrap() < 1e-18);
        // Closed form tracks the quadrature ratio at xi = 1 (the K0 form is
        // itself a long-distance approximation, so 5%).
        let xi = 1.0;
        let quad = cap_inverse((1, 0), xi).unwrap() / cap_inverse((0, 0), xi).unwrap();
        let closed = ecc_ratio(xi).unwrap();
        assert!((closed - quad).abs() <= 0.05 * quad, "closed={closed} quad={quad}");
        // Monotone increasing on a sampled grid.
        let mut prev = 0.0;
        for i in 1..=10 {
            let v = ecc_ratio(0.1 * i as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn xi_inversion_round_trip() {
        for &xi in &[0.3, 1.0, 3.0] {
            let r = ecc_ratio(xi).unwrap();
            let back = xi_from_ecc_ratio(r).unwrap();
            assert!((back - xi).abs() < 1e-8 * xi);
        }
        assert!(xi_from_ecc_ratio(0.9).is_err());
    }

    fn derive_preset() -> CouplingSet {
        derive_couplings(&strong_coupling_preset(), 100).unwrap()
    }

    #[test]
    fn coupling_signs_and_identities() {
        let cs = derive_preset();
        assert!(cs.u > 0.0 && cs.delta > 0.0 && cs.j <= 0.0);
        assert!((cs.g2_elec - (cs.v + 2.0 * cs.j * cs.j / cs.u)).abs() < 1e-15);
        assert!((cs.product - cs.g2_elec / cs.g2_mag_inv).abs() < 1e-9 * cs.product);
        // Measured values on the strong preset (independently cross-checked
        // against a real-space finite-difference diagonalization).
        assert!((cs.v - 0.0654).abs() < 0.001, "V = {}", cs.v);
        assert!((cs.delta - 0.00897).abs() < 0.0002, "delta = {}", cs.delta);
        assert!((cs.provenance.n10 - 0.04289).abs() < 0.0005);
        assert!((cs.provenance.phi_ge - 3.090).abs() < 0.01);
    }

    #[test]
    fn coupling_scale_covariance() {
        let np = strong_coupling_preset();
        let cs1 = derive_couplings(&np, 80).unwrap();
        let lam = 2.0;
        let scaled = NetworkParams {
            link: DeviceParams {
                e_c: np.link.e_c * lam,
                e_j: np.link.e_j * lam,
                e_l: np.link.e_l * lam,
                phi_off: 0.0,
            },
            ancilla: DeviceParams {
                e_c: np.ancilla.e_c * lam,
                e_j: np.ancilla.e_j * lam,
                e_l: np.ancilla.e_l * lam,
                phi_off: std::f64::consts::PI,
            },
            e_cl: np.e_cl * lam,
            coupling: CapCoupling::Ecc(0.04 * lam),
        };
        let cs2 = derive_couplings(&scaled, 80).unwrap();
        for (a, b) in [
            (cs1.delta, cs2.delta),
            (cs1.u, cs2.u),
            (cs1.v, cs2.v),
            (cs1.j, cs2.j),
            (cs1.g2_elec, cs2.g2_elec),
        ] {
            assert!((lam * a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn zero_inductive_coupler_disables_gauss() {
        let mut np = strong_coupling_preset();
        np.e_cl = 0.0;
        let cs = derive_couplings(&np, 80).unwrap();
        assert!(!cs.gauss_active);
        assert_eq!(cs.u, 0.0);
        assert!(cs.j < 0.0);
        assert!(cs.product.is_infinite());
        // J unchanged up to the small E_L-shift dependence of n10.
        let cs_ref = derive_preset();
        assert!((cs.j - cs_ref.j).abs() < 0.15 * cs_ref.j.abs());
    }

    #[test]
    fn stark_shift_zero_drive_is_identity() {
        let np = strong_coupling_preset();
        let link = np.link.with_e_l_shift(2.0 * np.e_cl).unwrap();
        let spec = device::spectrum(&link, 100).unwrap();
        let q = device::qutrit_states(&spec).unwrap();
        let d = DriveParams::new(1.588 * np.link.e_j, 0.0, &q);
        let s = stark_shift(&q, &spec, &d).unwrap();
        assert_eq!(s.shifts, [0.0; 3]);
        assert!((s.v_prime - q.splitting_v).abs() < 1e-15);
    }

    #[test]
    fn stark_shift_single_level_red_detuning_reduces_v() {
        // A drive just below the 0→s transition: the s-level term dominates
        // and carries δ < 0, so V' < V.
        let np = strong_coupling_preset();
        let link = np.link.with_e_l_shift(2.0 * np.e_cl).unwrap();
        let spec = device::spectrum(&link, 100).unwrap();
        let q = device::qutrit_states(&spec).unwrap();
        let transition = q.s_energy - q.energies[0];
        let d = DriveParams::new(transition - 0.02 * np.link.e_j, 0.05, &q);
        assert!(d.detuning < 0.0);
        let s = stark_shift(&q, &spec, &d).unwrap();
        assert!(s.shifts[0] < 0.0);
        assert!(s.v_prime < q.splitting_v);
    }

    #[test]
    fn optimize_drive_no_op_with_zero_g() {
        let np = strong_coupling_preset();
        let link = np.link.with_e_l_shift(2.0 * np.e_cl).unwrap();
        let spec = device::spectrum(&link, 100).unwrap();
        let q = device::qutrit_states(&spec).unwrap();
        let bounds = DriveBounds { omega: (0.2, 0.4), g2: (0.0, 0.0) };
        let (d, s) = optimize_drive(&q, &spec, &bounds, 1e-4).unwrap();
        assert_eq!(d.g_strength, 0.0);
        assert_eq!(d.omega_f, 0.2); // tie-break: lowest omega
        assert!((s.v_prime - q.splitting_v).abs() < 1e-15);
    }

    #[test]
    fn decoherence_budget_reference_point() {
        // U = 0.032 E_J, J = −0.04 U, E_J = 40 GHz, T₁ᵃ = 1 ms.
        let u = 0.032;
        let j = -0.04 * u;
        let prov = CouplingProvenance {
            phi_ge: 0.0,
            phi_m1: 0.0,
            n10: 0.0,
            n10_exact: 0.0,
            n10_tight_binding: 0.0,
            doublet_splitting: 0.0,
            e_cc: 0.0,
            charge_source: ChargeSource::Exact,
            basis_dim: 0,
        };
        let cs = CouplingSet {
            delta: 1.0,
            u,
            v: 0.0,
            j,
            g2_elec: 2.0 * j * j / u,
            g2_mag_inv: 2.0 * j * j / u,
            product: 1.0,
            gauss_active: true,
            provenance: prov,
        };
        let b = decoherence_budget(&cs, 40e9, 1e-3).unwrap();
        assert!((b.gap_min - 8.0 * j * j / u).abs() < 1e-18);
        assert!((b.t_sim - 0.135e-6).abs() < 0.15 * 0.135e-6, "t_sim = {}", b.t_sim);
        assert!(b.ancilla_error > 0.5e-4 && b.ancilla_error < 2e-4);
        assert!(b.max_links >= 100 && b.max_links <= 10_000, "max_links = {}", b.max_links);
        // J = 0 flags an infinite sweep time.
        let mut cs0 = cs;
        cs0.j = 0.0;
        cs0.g2_mag_inv = 0.0;
        let b0 = decoherence_budget(&cs0, 40e9, 1e-3).unwrap();
        assert!(b0.gap_closed && b0.t_sim.is_infinite());
    }

    #[test]
    fn coupling_charge_source_switch() {
        let np = strong_coupling_preset();
        let exact = derive_couplings_with(&np, 80, ChargeSource::Exact).unwrap();
        let tb = derive_couplings_with(&np, 80, ChargeSource::TightBinding).unwrap();
        assert!(tb.j.abs() < exact.j.abs());
        assert!((tb.provenance.n10 - exact.provenance.n10_tight_binding).abs() < 1e-15);
        assert_eq!(exact.provenance.n10, exact.provenance.n10_exact);
    }
}
