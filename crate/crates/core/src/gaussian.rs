//! Closed-form Gaussian calculus.

use std::f64::consts::{E, PI};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{check_simplex, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: SymMatrix,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.order() {
            return Err(Error::Dimension(format!(
                "mean has length {} but covariance has order {}",
                mean.len(),
                cov.order()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mean"));
        }
        let tol = 1e-10 * (1.0 + cov.max_abs());
        let min = cov.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self { mean, cov })
    }

    pub fn centered(cov: SymMatrix) -> Result<Self> {
        let d = cov.order();
        Self::new(DVector::zeros(d), cov)
    }

    /// The standard Gaussian γ on `R^d`.
    pub fn standard(d: usize) -> Self {
        Self { mean: DVector::zeros(d), cov: SymMatrix::identity(d) }
    }

    /// One-dimensional `N(mean, var)`.
    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), SymMatrix::scalar(var)?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn translated(&self, v: &DVector<f64>) -> Result<Self> {
        Self::new(&self.mean + v, self.cov.clone())
    }

    /// Differential entropy `(d/2)·log(2πe) + ½·log det K`.
    pub fn entropy(&self) -> Result<f64> {
        let ld = self.cov.logdet().map_err(|_| Error::SingularCovariance)?;
        Ok(0.5 * self.dim() as f64 * (2.0 * PI * E).ln() + 0.5 * ld)
    }

    /// Relative entropy with respect to the standard Gaussian. A singular
    /// covariance gives `+∞` (see [`GaussianMeasure::is_degenerate`]).
    pub fn relative_entropy(&self) -> f64 {
        match self.cov.logdet() {
            Ok(ld) => {
                let d = self.dim() as f64;
                let v = 0.5 * (self.cov.trace() + self.mean.norm_squared() - d - ld);
                v.max(0.0)
            }
            Err(_) => f64::INFINITY,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.cov.logdet().is_err()
    }
}

/// Quadratic Wasserstein distance between Gaussians (the distance, not its square).
pub fn w2_gaussian(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<f64> {
    Ok(w2_squared_gaussian(g1, g2)?.sqrt())
}

pub fn w2_squared_gaussian(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::Dimension("Gaussians live in different dimensions".into()));
    }
    let s2 = g2.cov.sqrt_psd()?;
    let inner = SymMatrix::symmetrized(s2.as_matrix() * g1.cov.as_matrix() * s2.as_matrix());
    let cross = inner.sqrt_psd()?;
    let bures = g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace();
    Ok((g1.mean.clone() - &g2.mean).norm_squared() + bures.max(0.0))
}

/// Wasserstein barycenter of centered Gaussians with weights `lambda`.
pub fn barycenter_gaussian(lambda: &[f64], gs: &[GaussianMeasure]) -> Result<GaussianMeasure> {
    check_simplex(lambda)?;
    if lambda.len() != gs.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} measures",
            lambda.len(),
            gs.len()
        )));
    }
    let d = gs[0].dim();
    if gs.iter().any(|g| g.dim() != d) {
        return Err(Error::Dimension("measures live in different dimensions".into()));
    }
    if gs.iter().any(|g| g.mean.amax() > 1e-9) {
        return Err(Error::HypothesisViolated("barycenter inputs must be centered".into()));
    }
    for g in gs {
        g.cov.inverse_pd()?;
    }
    let covs: Vec<&SymMatrix> = gs.iter().map(|g| &g.cov).collect();
    let k = barycenter_covariance(lambda, &covs)?;
    GaussianMeasure::centered(k)
}

/// Fixed point `K = Σλ_i (K^{1/2} K_i K^{1/2})^{1/2}` via the contraction
/// `K ← K^{-1/2} (Σλ_i (K^{1/2} K_i K^{1/2})^{1/2})² K^{-1/2}`.
pub(crate) fn barycenter_covariance(lambda: &[f64], covs: &[&SymMatrix]) -> Result<SymMatrix> {
    const MAX_ITER: usize = 10_000;
    let d = covs[0].order();
    let mut k = SymMatrix::zeros(d);
    for (l, c) in lambda.iter().zip(covs) {
        k = k.add(&c.scale(*l))?;
    }
    let mean_map = |k: &SymMatrix| -> Result<(SymMatrix, SymMatrix)> {
        let s = k.sqrt_psd()?;
        let mut t = SymMatrix::zeros(d);
        for (l, c) in lambda.iter().zip(covs) {
            let inner = SymMatrix::symmetrized(s.as_matrix() * c.as_matrix() * s.as_matrix());
            t = t.add(&inner.sqrt_psd()?.scale(*l))?;
        }
        Ok((s, t))
    };
    for _ in 0..MAX_ITER {
        let (s, t) = mean_map(&k)?;
        let s_inv = s.inverse_pd()?;
        let t2 = t.as_matrix() * t.as_matrix();
        let next = SymMatrix::symmetrized(s_inv.as_matrix() * t2 * s_inv.as_matrix());
        let step = next.sub(&k)?.frobenius();
        k = next;
        if step < 1e-12 * (1.0 + k.frobenius()) {
            let (_, t) = mean_map(&k)?;
            let residual = t.sub(&k)?.frobenius();
            if residual > 1e-10 * (1.0 + k.frobenius()) {
                return Err(Error::Convergence { what: "Gaussian barycenter", iterations: MAX_ITER });
            }
            return Ok(k);
        }
    }
    Err(Error::Convergence { what: "Gaussian barycenter", iterations: MAX_ITER })
}
