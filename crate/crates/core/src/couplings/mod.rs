//! Coupling optimizers: Gaussian covariance SDP and discrete multimarginal transport.

mod comonotone;
mod discrete;
mod mmot;
mod sdp;
mod sinkhorn;

pub use comonotone::{comonotone_coupling, sign_pattern, sup_coupling_grid, GridCoupling};
pub use discrete::{barycenter_discrete, w2_discrete, w2_squared_discrete};
pub use mmot::{mmot_exact, MMOT_CELL_LIMIT};
pub use sdp::{max_coupling_gaussian, max_coupling_gaussian_with, min_coupling_gaussian, SdpMethod, SdpOptions};
pub use sinkhorn::{mmot_sinkhorn, mmot_sinkhorn_with, SinkhornOptions, SINKHORN_CELL_LIMIT};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{BlockStructure, SymMatrix};

/// Symmetric `Q` on `E = ⊕E_i` together with its block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: SymMatrix,
    bs: BlockStructure,
}

impl QuadraticForm {
    pub fn new(q: SymMatrix, bs: BlockStructure) -> Result<Self> {
        if q.order() != bs.total() {
            return Err(Error::Dimension(format!(
                "form has order {} but blocks total {}",
                q.order(),
                bs.total()
            )));
        }
        Ok(Self { q, bs })
    }

    pub fn zero(bs: BlockStructure) -> Self {
        Self { q: SymMatrix::zeros(bs.total()), bs }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.q
    }

    pub fn blocks(&self) -> &BlockStructure {
        &self.bs
    }

    pub fn n(&self) -> usize {
        self.bs.n()
    }

    pub fn block(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        self.q.block(&self.bs, i, j)
    }

    /// `⟨x, Qx⟩` for the concatenated vector `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.q.quad(x)
    }

    /// `⟨x, Qx⟩` for per-block pieces.
    pub fn eval_blocks(&self, xs: &[&[f64]]) -> f64 {
        let flat: Vec<f64> = xs.iter().flat_map(|x| x.iter().copied()).collect();
        self.eval(&flat)
    }

    /// `Q + δ·I`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { q: self.q.shift(delta), bs: self.bs.clone() }
    }

    pub fn negated(&self) -> Self {
        Self { q: self.q.scale(-1.0), bs: self.bs.clone() }
    }
}

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("discrete measure needs at least one atom".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::Dimension("atoms must share a positive dimension".into()));
        }
        if points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("atom coordinates"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InfeasibleMarginals("weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InfeasibleMarginals(format!("weights sum to {s}, expected 1")));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
        if order.windows(2).any(|w| points[w[0]] == points[w[1]]) {
            return Err(Error::Invalid("atoms must be pairwise distinct".into()));
        }
        Ok(Self { points, weights })
    }

    /// Rescales the weights to unit mass before validating.
    pub fn normalized(points: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InfeasibleMarginals("total weight must be positive".into()));
        }
        let w = weights.iter().map(|x| x / s).collect();
        Self::new(points, w)
    }

    pub fn uniform(points: Vec<DVector<f64>>) -> Result<Self> {
        let n = points.len();
        Self::normalized(points, vec![1.0; n])
    }

    pub fn dirac(p: DVector<f64>) -> Result<Self> {
        Self::new(vec![p], vec![1.0])
    }

    pub fn from_1d(points: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|&x| DVector::from_element(1, x)).collect(), weights.to_vec())
    }

    pub fn uniform_1d(points: &[f64]) -> Result<Self> {
        Self::uniform(points.iter().map(|&x| DVector::from_element(1, x)).collect())
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for (p, w) in self.points.iter().zip(&self.weights) {
            m += p * *w;
        }
        m
    }

    pub fn covariance(&self) -> SymMatrix {
        let m = self.mean();
        let d = self.dim();
        let mut c = DMatrix::zeros(d, d);
        for (p, w) in self.points.iter().zip(&self.weights) {
            let x = p - &m;
            c += &x * x.transpose() * *w;
        }
        SymMatrix::symmetrized(c)
    }

    pub fn translated(&self, v: &DVector<f64>) -> Result<Self> {
        Self::new(self.points.iter().map(|p| p + v).collect(), self.weights.clone())
    }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Joint probability tensor over the product of supports, row-major with the
/// last marginal varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl CouplingTensor {
    pub(crate) fn new(shape: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), probs.len());
        Self { shape, probs }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Multi-index of flat cell `k`.
    pub fn index(&self, k: usize) -> Vec<usize> {
        unflatten(&self.shape, k)
    }

    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[i]];
        let stride: usize = self.shape[i + 1..].iter().product();
        for (k, p) in self.probs.iter().enumerate() {
            out[(k / stride) % self.shape[i]] += p;
        }
        out
    }

    /// Largest absolute deviation between any marginal and the given weights.
    pub fn marginal_residual(&self, marginals: &[DiscreteMeasure]) -> f64 {
        let mut r: f64 = 0.0;
        for (i, m) in marginals.iter().enumerate() {
            for (a, b) in self.marginal(i).iter().zip(m.weights()) {
                r = r.max((a - b).abs());
            }
        }
        r
    }
}

pub(crate) fn unflatten(shape: &[usize], mut k: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = k % shape[a];
        k /= shape[a];
    }
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Covariance(SymMatrix),
    Tensor(CouplingTensor),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIter,
    Infeasible,
}

/// How the reported `gap` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    /// Dual feasible point; the optimum lies in `[value, value + gap]`.
    Certified,
    /// Stall-based estimate.
    Heuristic,
    /// Exact solver, gap is zero up to rounding.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingResult {
    pub value: f64,
    pub optimizer: Optimizer,
    pub iterations: usize,
    pub gap: f64,
    pub gap_kind: GapKind,
    pub status: Status,
    /// Entropically regularized objective, for Sinkhorn runs.
    pub regularized_value: Option<f64>,
}

impl CouplingResult {
    pub fn tensor(&self) -> Option<&CouplingTensor> {
        match &self.optimizer {
            Optimizer::Tensor(t) => Some(t),
            Optimizer::Covariance(_) => None,
        }
    }

    pub fn covariance(&self) -> Option<&SymMatrix> {
        match &self.optimizer {
            Optimizer::Covariance(c) => Some(c),
            Optimizer::Tensor(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Min,
    Max,
}

/// Cost of a discrete multimarginal problem.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `Σ_{i<j} w_i w_j |x_i − x_j|²`.
    Pairwise(Vec<f64>),
    /// `⟨x, Qx⟩` on the concatenated atoms.
    Quadratic(QuadraticForm),
}

impl CostSpec {
    pub(crate) fn validate(&self, marginals: &[DiscreteMeasure]) -> Result<()> {
        if marginals.is_empty() {
            return Err(Error::Invalid("need at least one marginal".into()));
        }
        match self {
            CostSpec::Pairwise(w) => {
                if w.len() != marginals.len() {
                    return Err(Error::Dimension(format!(
                        "{} pairwise weights for {} marginals",
                        w.len(),
                        marginals.len()
                    )));
                }
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("pairwise weights"));
                }
                let d = marginals[0].dim();
                if marginals.iter().any(|m| m.dim() != d) {
                    return Err(Error::Dimension("pairwise cost needs a common dimension".into()));
                }
            }
            CostSpec::Quadratic(q) => {
                if q.n() != marginals.len() {
                    return Err(Error::Dimension(format!(
                        "form has {} blocks for {} marginals",
                        q.n(),
                        marginals.len()
                    )));
                }
                for (i, m) in marginals.iter().enumerate() {
                    if m.dim() != q.blocks().dim(i) {
                        return Err(Error::Dimension(format!(
                            "marginal {i} has dimension {} but block has {}",
                            m.dim(),
                            q.blocks().dim(i)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Cost at one cell given the atoms chosen in each marginal.
    pub(crate) fn at(&self, xs: &[&DVector<f64>]) -> f64 {
        match self {
            CostSpec::Pairwise(w) => {
                let mut c = 0.0;
                for i in 0..xs.len() {
                    for j in i + 1..xs.len() {
                        c += w[i] * w[j] * (xs[i] - xs[j]).norm_squared();
                    }
                }
                c
            }
            CostSpec::Quadratic(q) => {
                let flat: Vec<f64> = xs.iter().flat_map(|x| x.iter().copied()).collect();
                q.eval(&flat)
            }
        }
    }
}

pub(crate) fn product_size(marginals: &[DiscreteMeasure]) -> u128 {
    marginals.iter().map(|m| m.len() as u128).product()
}

/// Cost of every product cell, same ordering as [`CouplingTensor`].
pub(crate) fn cell_costs(marginals: &[DiscreteMeasure], cost: &CostSpec) -> Vec<f64> {
    let shape: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        let xs: Vec<&DVector<f64>> = idx.iter().zip(marginals).map(|(&k, m)| &m.points()[k]).collect();
        out.push(cost.at(&xs));
        for a in (0..shape.len()).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}
