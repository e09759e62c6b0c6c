//! Sparse Hermitian operators in CSR form, plus the matrix-free operator
//! abstraction the eigensolvers run on.
//!
//! Assembly goes through [`SparseBuilder`], which sorts coordinate triplets
//! row-major and merges duplicates, so identical build sequences produce
//! byte-identical operators regardless of thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};

/// Which basis an operator's indices refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BasisTag {
    /// All 3^n spin words.
    Full,
    /// The enumerated zero-charge sector.
    GaugeSector,
    /// A magnetization (or other word-list) sector.
    Sector,
}

/// Abstract real-symmetric operator: everything the iterative solvers need.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    /// y = A x.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Matrix diagonal (used for preconditioning).
    fn diagonal(&self) -> Vec<f64>;
}

/// Hermitian sparse operator in CSR storage.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    pub hermitian: bool,
    pub basis: BasisTag,
}

/// Coordinate-triplet accumulator for deterministic CSR assembly.
pub struct SparseBuilder {
    dim: usize,
    basis: BasisTag,
    entries: Vec<(u32, u32, Complex64)>,
}

impl SparseBuilder {
    pub fn new(dim: usize, basis: BasisTag) -> Self {
        Self { dim, basis, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, val: Complex64) {
        debug_assert!(row < self.dim && col < self.dim);
        if val != Complex64::ZERO {
            self.entries.push((row as u32, col as u32, val));
        }
    }

    pub fn push_real(&mut self, row: usize, col: usize, val: f64) {
        self.push(row, col, Complex64::new(val, 0.0));
    }

    /// Emit both (r,c) and (c,r)=conj so Hermiticity holds by construction.
    pub fn push_hermitian_pair(&mut self, row: usize, col: usize, val: Complex64) {
        self.push(row, col, val);
        if row != col {
            self.push(col, row, val.conj());
        }
    }

    pub fn finish(mut self, hermitian: bool) -> SparseOperator {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|&(_, c, _)| c).collect();
        let vals = merged.iter().map(|&(_, _, v)| v).collect();
        SparseOperator { dim: self.dim, row_ptr, cols, vals, hermitian, basis: self.basis }
    }
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row slice as (columns, values).
    pub fn row(&self, r: usize) -> (&[u32], &[Complex64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(i) => vals[i],
            Err(_) => Complex64::ZERO,
        }
    }

    /// True when every stored value is real.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// Spot-check the Hermitian flag on up to `samples` stored entries.
    pub fn verify_hermitian(&self, samples: usize) -> bool {
        if self.nnz() == 0 {
            return true;
        }
        let stride = (self.nnz() / samples.max(1)).max(1);
        let mut k = 0;
        while k < self.nnz() {
            let r = match self.row_ptr.partition_point(|&p| p <= k) {
                0 => 0,
                i => i - 1,
            };
            let c = self.cols[k] as usize;
            if (self.get(r, c) - self.get(c, r).conj()).norm() > 1e-12 {
                return false;
            }
            k += stride;
        }
        true
    }

    /// y = A x over complex vectors.
    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let (cols, vals) = {
                let span = self.row_ptr[r]..self.row_ptr[r + 1];
                (&self.cols[span.clone()], &self.vals[span])
            };
            let mut acc = Complex64::ZERO;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            *out = acc;
        });
    }

    /// Rough operator-norm bound from the row sums (Gershgorin).
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                let (_, vals) = self.row(r);
                vals.iter().map(|v| v.norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m[(r, *c as usize)] = *v;
            }
        }
        m
    }

    /// Text triplet dump: header line `dim <n> basis <tag>`, then one
    /// `row col re im` line per stored entry in row-major order.
    pub fn to_triplet_text(&self) -> String {
        let mut out = format!("dim {} basis {:?}\n", self.dim, self.basis);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                out.push_str(&format!("{r} {c} {} {}\n", v.re, v.im));
            }
        }
        out
    }

    /// Require a real-symmetric operator (what the iterative solvers need).
    pub fn require_real_symmetric(&self) -> Result<()> {
        if !self.hermitian {
            return Err(CoreError::Argument("operator is not flagged hermitian".into()));
        }
        if !self.is_real() {
            return Err(CoreError::Argument(
                "operator has complex entries; the real solver path does not apply".into(),
            ));
        }
        Ok(())
    }
}

impl LinearOp for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = 0.0;
            for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                acc += v.re * x[*c as usize];
            }
            *out = acc;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r).re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_merges_and_sorts() {
        let mut b = SparseBuilder::new(3, BasisTag::Full);
        b.push_real(2, 0, 1.0);
        b.push_real(0, 1, 2.0);
        b.push_real(2, 0, 0.5);
        b.push_real(0, 1, -2.0);
        let op = b.finish(false);
        assert_eq!(op.get(2, 0).re, 1.5);
        assert_eq!(op.get(0, 1).re, 0.0);
        assert_eq!(op.get(1, 1), Complex64::ZERO);
    }

    #[test]
    fn hermitian_pair_and_verification() {
        let mut b = SparseBuilder::new(4, BasisTag::Full);
        b.push_hermitian_pair(0, 2, Complex64::new(0.0, 1.0));
        b.push_hermitian_pair(1, 1, Complex64::new(3.0, 0.0));
        let op = b.finish(true);
        assert!(op.verify_hermitian(16));
        assert_eq!(op.get(2, 0), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn apply_matches_dense() {
        let mut b = SparseBuilder::new(3, BasisTag::Full);
        b.push_real(0, 0, 2.0);
        b.push_hermitian_pair(0, 1, Complex64::new(-1.0, 0.0));
        b.push_real(2, 2, 5.0);
        let op = b.finish(true);
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        op.apply(&x, &mut y);
        assert_eq!(y, [0.0, -1.0, 15.0]);
        assert_eq!(op.diagonal(), vec![2.0, 0.0, 5.0]);
        assert!(op.norm_estimate() >= 5.0);
    }

    #[test]
    fn triplet_text_round_shape() {
        let mut b = SparseBuilder::new(2, BasisTag::GaugeSector);
        b.push_real(0, 1, 1.25);
        let op = b.finish(false);
        let text = op.to_triplet_text();
        assert!(text.starts_with("dim 2 basis GaugeSector\n"));
        assert!(text.contains("0 1 1.25 0"));
    }
}
