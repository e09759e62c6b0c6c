//! Expectation values of the non-local order/disorder parameters and the
//! gauge-violation diagnostic on state vectors.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::lattice::{LatticeGeometry, Path, PathKind};
use crate::model::{self, WordBasis};
use crate::sparse::BasisTag;

/// Sign convention of the 't Hooft string phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StringConvention {
    /// e^{+iφ S^z} on every string link.
    Uniform,
    /// Alternating e^{∓iφ S^z} along the string (the measurable operator).
    Alternating,
}

/// Amplitudes over a declared word basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub basis: WordBasis,
}

impl StateVector {
    /// Wrap amplitudes, enforcing unit norm to 1e-10.
    pub fn new(basis: WordBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(CoreError::BasisMismatch(format!(
                "{} amplitudes over a dimension-{} basis",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(CoreError::Argument(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Wrap and normalize real amplitudes (eigensolver output).
    pub fn from_real(basis: WordBasis, amplitudes: &[f64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CoreError::Argument("zero vector".into()));
        }
        let amps = amplitudes.iter().map(|&a| Complex64::new(a / norm, 0.0)).collect();
        Self::new(basis, amps)
    }

    /// Basis word of a single-word (computational-basis) state.
    pub fn basis_word(basis: WordBasis, word: u64) -> Result<Self> {
        let idx = basis
            .index_of(word)
            .ok_or_else(|| CoreError::BasisMismatch(format!("word {word} not in basis")))?;
        let mut amps = vec![Complex64::ZERO; basis.dim()];
        amps[idx] = Complex64::ONE;
        Self::new(basis, amps)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn check_path_links(psi: &StateVector, path: &Path) -> Result<()> {
    for &(l, _) in &path.steps {
        if l >= psi.basis.n_links {
            return Err(CoreError::BasisMismatch(format!(
                "path link {l} outside basis with {} links",
                psi.basis.n_links
            )));
        }
    }
    Ok(())
}

/// ⟨ψ| Π_j e^{i s_j φ S^z} |ψ⟩ along a string path; diagonal in the word
/// basis so evaluated as an amplitude-weighted phase sum.
pub fn expect_thooft(
    psi: &StateVector,
    path: &Path,
    varphi: f64,
    convention: StringConvention,
) -> Result<Complex64> {
    if path.kind != PathKind::ThooftString {
        return Err(CoreError::Argument("expect_thooft requires a string path".into()));
    }
    check_path_links(psi, path)?;
    let mut acc = Complex64::ZERO;
    for (i, a) in psi.amplitudes.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let w = psi.basis.word_at(i);
        let mut phase = 0.0;
        for (j, &(l, s)) in path.steps.iter().enumerate() {
            let sign = match convention {
                StringConvention::Uniform => 1.0,
                StringConvention::Alternating => {
                    debug_assert_eq!(s, if j % 2 == 0 { -1 } else { 1 });
                    f64::from(s)
                }
            };
            phase += sign * varphi * model::flux(w, l) as f64;
        }
        acc += a.norm_sqr() * Complex64::from_polar(1.0, phase);
    }
    Ok(acc)
}

/// ⟨ψ| W(C) |ψ⟩ with W the ordered product of S∓ per traversal sign
/// (lowering on traversal-positive links).
pub fn expect_wilson(psi: &StateVector, loop_path: &Path) -> Result<Complex64> {
    if loop_path.kind != PathKind::WilsonLoop {
        return Err(CoreError::Argument("expect_wilson requires a closed Wilson loop".into()));
    }
    check_path_links(psi, loop_path)?;
    let mut acc = Complex64::ZERO;
    for (i, a) in psi.amplitudes.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut w = psi.basis.word_at(i);
        let mut amp = 1.0;
        for &(l, trav) in &loop_path.steps {
            let m = model::flux(w, l);
            let (f, dm) = if trav > 0 {
                ((((1 + m) * (2 - m)) as f64).sqrt(), -1)
            } else {
                ((((1 - m) * (2 + m)) as f64).sqrt(), 1)
            };
            if f == 0.0 {
                amp = 0.0;
                break;
            }
            amp *= f;
            w = model::with_digit(w, l, (m + dm + 1) as u8);
        }
        if amp == 0.0 {
            continue;
        }
        if let Some(target) = psi.basis.index_of(w) {
            acc += psi.amplitudes[target].conj() * amp * a;
        }
    }
    Ok(acc)
}

/// Gauss-violation density (1/N_v) Σ_v ⟨G_v²⟩ on a full or sector basis.
pub fn gauss_density(psi: &StateVector, g: &LatticeGeometry) -> Result<f64> {
    if psi.basis.tag == BasisTag::GaugeSector {
        return Err(CoreError::BasisMismatch(
            "gauss_density on the gauge sector is identically zero; evaluate on the full or \
             magnetization basis"
                .into(),
        ));
    }
    if psi.basis.n_links != g.n_links() {
        return Err(CoreError::BasisMismatch("state basis does not match the geometry".into()));
    }
    let mut acc = 0.0;
    for (i, a) in psi.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let w = psi.basis.word_at(i);
        let g2: i32 = (0..g.n_vertices)
            .map(|v| model::vertex_charge(g, w, v, true).pow(2))
            .sum();
        acc += p * g2 as f64;
    }
    Ok(acc / g.n_vertices as f64)
}
