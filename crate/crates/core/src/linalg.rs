//! Dense symmetric-matrix kernel on top of nalgebra.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decomposition of `R^N` into consecutive blocks `R^{d_1} ⊕ ... ⊕ R^{d_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("block structure needs at least one block".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Dimension("block dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d;
        }
        Ok(Self { dims, offsets, total })
    }

    /// `n` blocks of equal dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i] + self.dims[i]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::Dimension(format!(
                "block index {i} out of range for {} blocks",
                self.n()
            )));
        }
        Ok(())
    }
}

/// Real symmetric matrix. Construction symmetrizes and rejects non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Eigen-decomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Dimension("matrix order must be positive".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let scale = 1.0 + m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-6 * scale {
            return Err(Error::Invalid(format!("matrix is not symmetric (asymmetry {asym:e})")));
        }
        let s = (&m + m.transpose()) * 0.5;
        Ok(Self(s))
    }

    /// Symmetrizes without the asymmetry check. For internal results that are
    /// symmetric up to rounding.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        Self((&m + m.transpose()) * 0.5)
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for order {n}, got {}",
                n * n,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must all have length equal to their count".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(n, &flat)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::from_row_slice(1, &[x])
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// Block-diagonal matrix with the given diagonal blocks.
    pub fn block_diagonal(blocks: &[SymMatrix]) -> Self {
        let total: usize = blocks.iter().map(|b| b.order()).sum();
        let mut m = DMatrix::zeros(total, total);
        let mut off = 0;
        for b in blocks {
            let d = b.order();
            m.view_mut((off, off), (d, d)).copy_from(&b.0);
            off += d;
        }
        Self(m)
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self(&self.0 * t)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::Dimension("order mismatch in addition".into()));
        }
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// `self + t·I`.
    pub fn shift(&self, t: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += t;
        }
        Self(m)
    }

    /// `xᵀ A x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let n = self.order();
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.0[(i, j)] * x[j];
            }
            s += x[i] * row;
        }
        s
    }

    /// `Mᵀ A M` for a square `M` (change of basis).
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.order() || m.ncols() != self.order() {
            return Err(Error::Dimension("congruence requires a matching square matrix".into()));
        }
        Ok(Self::symmetrized(m.transpose() * &self.0 * m))
    }

    /// The `(d_i × d_j)` sub-block at block offsets `(i, j)`, zero-based.
    pub fn block(&self, bs: &BlockStructure, i: usize, j: usize) -> Result<DMatrix<f64>> {
        if self.order() != bs.total() {
            return Err(Error::Dimension(format!(
                "matrix order {} does not match block total {}",
                self.order(),
                bs.total()
            )));
        }
        bs.check_index(i)?;
        bs.check_index(j)?;
        Ok(self
            .0
            .view((bs.offset(i), bs.offset(j)), (bs.dim(i), bs.dim(j)))
            .into_owned())
    }

    /// Diagonal block `i` as a symmetric matrix.
    pub fn diag_block(&self, bs: &BlockStructure, i: usize) -> Result<SymMatrix> {
        Ok(Self::symmetrized(self.block(bs, i, i)?))
    }

    pub fn eigen(&self) -> Eigen {
        let se = self.0.clone().symmetric_eigen();
        let n = self.order();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = DVector::from_iterator(n, idx.iter().map(|&k| se.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (c, &k) in idx.iter().enumerate() {
            vectors.set_column(c, &se.eigenvectors.column(k));
        }
        Eigen { values, vectors }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    /// Spectral norm, the largest absolute eigenvalue.
    pub fn norm2(&self) -> f64 {
        let e = self.eigen();
        e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigen();
        Self::from_eigen(&e, f)
    }

    fn from_eigen(e: &Eigen, f: impl Fn(f64) -> f64) -> Self {
        let d = DVector::from_iterator(e.values.len(), e.values.iter().map(|&v| f(v)));
        let m = &e.vectors * DMatrix::from_diagonal(&d) * e.vectors.transpose();
        Self::symmetrized(m)
    }

    /// Principal square root. Slightly negative eigenvalues are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let e = self.eigen();
        let norm = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = e.values[0];
        if min < -1e-8 * norm {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self::from_eigen(&e, |v| v.max(0.0).sqrt()))
    }

    /// Inverse square root of a positive definite matrix.
    pub fn inv_sqrt_pd(&self) -> Result<Self> {
        let e = self.pd_eigen()?;
        Ok(Self::from_eigen(&e, |v| 1.0 / v.sqrt()))
    }

    pub fn inverse_pd(&self) -> Result<Self> {
        let e = self.pd_eigen()?;
        Ok(Self::from_eigen(&e, |v| 1.0 / v))
    }

    /// Moore-Penrose pseudo-inverse of a PSD matrix, cutting eigenvalues below
    /// `1e-12·‖A‖`.
    pub fn pinv_psd(&self) -> Self {
        let e = self.eigen();
        let norm = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cut = 1e-12 * norm;
        Self::from_eigen(&e, |v| if v > cut { 1.0 / v } else { 0.0 })
    }

    fn pd_eigen(&self) -> Result<Eigen> {
        let e = self.eigen();
        let norm = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = e.values[0];
        if !(min > 1e-12 * norm) || min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(e)
    }

    /// Log-determinant through a Cholesky factorization.
    pub fn logdet(&self) -> Result<f64> {
        self.pd_eigen()?;
        let chol = self
            .0
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eigenvalue: self.min_eigenvalue() })?;
        let l = chol.l_dirty();
        Ok(2.0 * (0..self.order()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }

    /// Nearest PSD matrix in Frobenius norm.
    pub fn project_psd(&self) -> Self {
        self.map_spectrum(|v| v.max(0.0))
    }

    /// Matrix exponential of a symmetric matrix.
    pub fn exp(&self) -> Self {
        self.map_spectrum(f64::exp)
    }
}

/// Validates a weight vector: positive finite entries summing to one within `1e-9`.
pub fn check_simplex(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::Simplex("empty weight vector".into()));
    }
    if lambda.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::Simplex(format!("weights must be positive, got {lambda:?}")));
    }
    let s: f64 = lambda.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Simplex(format!("weights sum to {s}, expected 1")));
    }
    Ok(())
}

/// Polar factor `A Bᵀ` of the thin SVD `M = A Σ Bᵀ`; rows are orthonormal when `M` is wide.
pub(crate) fn polar_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}
