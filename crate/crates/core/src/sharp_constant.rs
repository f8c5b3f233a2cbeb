//! The Gaussian sharp constant `D_g(c, Q)` and related scans.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::couplings::{max_coupling_gaussian_with, sup_coupling_grid, QuadraticForm, SdpOptions};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridMeasure};
use crate::linalg::{check_simplex, BlockStructure, SymMatrix};
use crate::optim::{maximize, BfgsOptions};

/// Weights `c`, form `Q` and regularizer `δ` of an entropy inequality
/// `Σ c_i h(μ_i) ≤ sup E⟨X, (Q + δ) X⟩ + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProblem {
    c: Vec<f64>,
    q: QuadraticForm,
    delta: f64,
}

impl EntropyProblem {
    pub fn new(c: Vec<f64>, q: QuadraticForm, delta: f64) -> Result<Self> {
        if c.len() != q.n() {
            return Err(Error::Dimension(format!("{} weights for {} blocks", c.len(), q.n())));
        }
        if c.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::Invalid(format!("entropy weights must be positive, got {c:?}")));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::Invalid(format!("delta must be nonnegative, got {delta}")));
        }
        Ok(Self { c, q, delta })
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn q(&self) -> &QuadraticForm {
        &self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.c.clone(), self.q.clone(), delta)
    }
}

/// Every diagonal block of `Q` is PSD (tolerance `1e-10`).
pub fn block_feasibility(q: &QuadraticForm) -> bool {
    (0..q.n()).all(|i| {
        q.matrix()
            .diag_block(q.blocks(), i)
            .map(|b| b.is_psd(1e-10))
            .unwrap_or(false)
    })
}

/// `c_i = λ_i(1 − λ_i)`, `Q_ij = (λ_iλ_j/2)·I` off the diagonal, zero diagonal
/// blocks, so that `⟨x, Qx⟩ = Σ_{i<j} λ_iλ_j⟨x_i, x_j⟩`.
pub fn encode_barycenter_form(lambda: &[f64], d: usize) -> Result<EntropyProblem> {
    check_simplex(lambda)?;
    if d == 0 {
        return Err(Error::Dimension("dimension must be positive".into()));
    }
    let n = lambda.len();
    let bs = BlockStructure::uniform(n, d)?;
    let mut m = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for a in 0..d {
                    m[(i * d + a, j * d + a)] = 0.5 * lambda[i] * lambda[j];
                }
            }
        }
    }
    let q = QuadraticForm::new(SymMatrix::new(m)?, bs)?;
    let c = lambda.iter().map(|l| l * (1.0 - l)).collect();
    EntropyProblem::new(c, q, 0.0)
}

/// Closed form `(d/2)·log(2π)·Σλ_i(1 − λ_i)` of the constant for the barycenter form.
pub fn barycenter_form_constant(lambda: &[f64], d: usize) -> Result<f64> {
    check_simplex(lambda)?;
    Ok(0.5 * d as f64 * (2.0 * PI).ln() * lambda.iter().map(|l| l * (1.0 - l)).sum::<f64>())
}

#[derive(Debug, Clone)]
pub struct DgOptions {
    /// Number of starts; at least 20 are always run, the first at identity covariances.
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub fd_step: f64,
    /// Box on the matrix-logarithm entries; landing on it flags unboundedness.
    pub bound: f64,
}

impl Default for DgOptions {
    fn default() -> Self {
        Self { starts: 20, max_iter: 200, seed: 0, fd_step: 1e-5, bound: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgStatus {
    Converged,
    BudgetExhausted,
    InfeasibleBlocks,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: usize,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DgResult {
    /// Best objective reached: a lower bound on `D_g`, or `+∞`.
    pub value: f64,
    pub status: DgStatus,
    /// Maximizing covariances of the best start.
    pub covariances: Vec<SymMatrix>,
    pub starts: Vec<StartTrace>,
}

fn params_to_covs(theta: &[f64], bs: &BlockStructure) -> Vec<SymMatrix> {
    let mut k = 0;
    (0..bs.n())
        .map(|i| {
            let d = bs.dim(i);
            let mut l = DMatrix::zeros(d, d);
            for a in 0..d {
                for b in a..d {
                    l[(a, b)] = theta[k];
                    l[(b, a)] = theta[k];
                    k += 1;
                }
            }
            SymMatrix::new(l).expect("finite parameters").exp()
        })
        .collect()
}

/// `Σc_i h(N(0, K_i)) − sup` with `K_i = exp(L_i)`; the supremum is replaced by
/// its certified upper bound so the result is a valid lower bound.
fn objective(p: &EntropyProblem, shifted: &QuadraticForm, theta: &[f64], sdp: &SdpOptions) -> f64 {
    let bs = p.q.blocks();
    let covs = params_to_covs(theta, bs);
    let mut entropy = 0.0;
    let mut k = 0;
    for i in 0..bs.n() {
        let d = bs.dim(i);
        let mut tr = 0.0;
        for a in 0..d {
            for b in a..d {
                if a == b {
                    tr += theta[k];
                }
                k += 1;
            }
        }
        entropy += p.c[i] * (0.5 * d as f64 * (2.0 * PI * E).ln() + 0.5 * tr);
    }
    match max_coupling_gaussian_with(shifted, &covs, sdp) {
        Ok(r) => entropy - (r.value + r.gap),
        Err(_) => f64::NEG_INFINITY,
    }
}

pub(crate) fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("SANTALO_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Multi-start maximization of the Gaussian objective over centered covariances.
pub fn dg_compute(p: &EntropyProblem, opts: &DgOptions) -> Result<DgResult> {
    if !block_feasibility(&p.q) {
        return Ok(DgResult { value: f64::INFINITY, status: DgStatus::InfeasibleBlocks, covariances: vec![], starts: vec![] });
    }
    let bs = p.q.blocks().clone();
    let dim: usize = bs.dims().iter().map(|d| d * (d + 1) / 2).sum();
    let shifted = p.q.shifted(p.delta);
    let sdp = SdpOptions { restarts: 2, ..SdpOptions::default() };
    let bfgs = BfgsOptions { max_iter: opts.max_iter, fd_step: opts.fd_step, bound: opts.bound, ..BfgsOptions::default() };
    let starts = opts.starts.max(20);

    let run = |s: usize| {
        let mut x0 = vec![0.0; dim];
        if s > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut k = 0;
            for i in 0..bs.n() {
                let d = bs.dim(i);
                for a in 0..d {
                    for b in a..d {
                        x0[k] = if a == b { rng.gen_range(-1.5..1.5) } else { rng.gen_range(-0.5..0.5) };
                        k += 1;
                    }
                }
            }
        }
        let r = maximize(|t| objective(p, &shifted, t, &sdp), &x0, &bfgs);
        (r, s)
    };
    let results: Vec<_> = thread_pool().install(|| (0..starts).into_par_iter().map(run).collect());

    let mut best = 0;
    for (k, (r, _)) in results.iter().enumerate() {
        if r.value > results[best].0.value {
            best = k;
        }
    }
    let traces = results
        .iter()
        .map(|(r, s)| StartTrace { start: *s, value: r.value, iterations: r.iterations, converged: r.converged, trace: r.trace.clone() })
        .collect();
    let (br, _) = &results[best];
    let on_box = br.x.iter().any(|v| v.abs() >= opts.bound * (1.0 - 1e-9));
    let (value, status) = if on_box {
        (f64::INFINITY, DgStatus::Unbounded)
    } else if br.converged {
        (br.value, DgStatus::Converged)
    } else {
        (br.value, DgStatus::BudgetExhausted)
    };
    Ok(DgResult { value, status, covariances: params_to_covs(&br.x, &bs), starts: traces })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaLimit {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    /// Values never drop by more than `1e-3` as `δ` decreases.
    pub monotone: bool,
}

/// `δ ↦ D_g(c, Q + δ)` along a strictly decreasing schedule with floor `1e-8`.
pub fn dg_delta_limit(p: &EntropyProblem, deltas: &[f64], opts: &DgOptions) -> Result<DeltaLimit> {
    if deltas.is_empty() {
        return Err(Error::Invalid("empty delta schedule".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("delta schedule must be strictly decreasing".into()));
    }
    if deltas.iter().any(|&d| !(d >= 1e-8) || !d.is_finite()) {
        return Err(Error::Invalid("delta schedule must stay at or above 1e-8".into()));
    }
    let values = deltas
        .iter()
        .map(|&d| dg_compute(&p.with_delta(d)?, opts).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - 1e-3 || w[1].is_infinite());
    Ok(DeltaLimit { deltas: deltas.to_vec(), values, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanMember {
    pub index: usize,
    pub label: String,
    pub entropy_side: f64,
    pub sup: f64,
    pub deficit: f64,
    pub exact_sup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub members: Vec<ScanMember>,
    pub min_deficit: f64,
    pub failures: usize,
}

/// A labelled tuple of one-dimensional marginals.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub label: String,
    pub marginals: Vec<GridMeasure>,
}

/// Deficit `D + sup − Σ c_i h(μ_i)` for every (recentered) member; members
/// below `−tol` are counted as failures.
pub fn empirical_d_scan(p: &EntropyProblem, family: &[FamilyMember], dg: f64, tol: f64) -> Result<ScanReport> {
    let mut members = Vec::with_capacity(family.len());
    for (index, fm) in family.iter().enumerate() {
        if fm.marginals.len() != p.c.len() {
            return Err(Error::Dimension(format!(
                "member {index} has {} marginals, problem has {}",
                fm.marginals.len(),
                p.c.len()
            )));
        }
        let centered: Vec<GridMeasure> = fm.marginals.iter().map(GridMeasure::centered).collect::<Result<_>>()?;
        let entropy_side: f64 = centered.iter().zip(&p.c).map(|(m, c)| c * m.entropy()).sum();
        let sup = sup_coupling_grid(&centered, &p.q.shifted(p.delta))?;
        members.push(ScanMember {
            index,
            label: fm.label.clone(),
            entropy_side,
            sup: sup.value,
            deficit: dg + sup.value - entropy_side,
            exact_sup: sup.exact,
        });
    }
    let min_deficit = members.iter().map(|m| m.deficit).fold(f64::INFINITY, f64::min);
    let failures = members.iter().filter(|m| m.deficit < -tol).count();
    Ok(ScanReport { members, min_deficit, failures })
}

const SHAPES: [&str; 11] = [
    "uniform", "triangular", "laplace", "logistic", "bimodal", "exponential", "gamma2", "cosine", "two-uniform",
    "student", "gaussian",
];

fn shape_pdf(shape: &str, s: f64, x: f64) -> f64 {
    let t = x / s;
    match shape {
        "uniform" => f64::from(t.abs() <= 1.0),
        "triangular" => (1.0 - t.abs()).max(0.0),
        "laplace" => (-t.abs()).exp(),
        "logistic" => {
            let e = (-t.abs()).exp();
            e / (1.0 + e).powi(2)
        }
        "bimodal" => (-(t - 1.5).powi(2) / 0.5).exp() + (-(t + 1.5).powi(2) / 0.5).exp(),
        "exponential" => if t >= 0.0 { (-t).exp() } else { 0.0 },
        "gamma2" => if t >= 0.0 { t * (-t).exp() } else { 0.0 },
        "cosine" => if t.abs() <= 1.0 { (PI * t).cos() + 1.0 } else { 0.0 },
        "two-uniform" => f64::from((-2.0..=-1.0).contains(&t)) + 2.0 * f64::from((0.5..=1.0).contains(&t)),
        "student" => (1.0 + t * t / 3.0).powi(-2),
        _ => (-t * t / 2.0).exp(),
    }
}

/// Seeded family of non-Gaussian tuples (plus a few Gaussian ones) on 1D
/// grids of `cells` cells, for [`empirical_d_scan`].
pub fn test_family(n: usize, count: usize, cells: usize, seed: u64) -> Result<Vec<FamilyMember>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let mut labels = Vec::with_capacity(n);
            let marginals = (0..n)
                .map(|i| {
                    let shape = SHAPES[(k + i * 3 + rng.gen_range(0..SHAPES.len())) % SHAPES.len()];
                    let s: f64 = rng.gen_range(0.4..2.5);
                    labels.push(format!("{shape}({s:.3})"));
                    let half = 16.0 * s;
                    let grid = Grid::line(-half, half, cells)?;
                    let m = GridMeasure::from_pdf(grid, |x| shape_pdf(shape, s, x[0] + s * shape_offset(shape)))?;
                    m.centered()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FamilyMember { label: labels.join(" x "), marginals })
        })
        .collect()
}

/// Skewed shapes are shifted so that most of their mass sits near the middle of the grid.
fn shape_offset(shape: &str) -> f64 {
    match shape {
        "exponential" => 1.0,
        "gamma2" => 2.0,
        _ => 0.0,
    }
}
