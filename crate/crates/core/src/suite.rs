//! End-to-end checkers for the transport–entropy inequalities around
//! Wasserstein barycenters. Every checker returns an [`InequalityReport`].

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::couplings::{
    barycenter_discrete, max_coupling_gaussian, mmot_exact, sup_coupling_grid, w2_squared_discrete, CostSpec,
    DiscreteMeasure, QuadraticForm, Sense, MMOT_CELL_LIMIT,
};
use crate::error::{Error, Result};
use crate::gaussian::{barycenter_gaussian, w2_squared_gaussian, GaussianMeasure};
use crate::grid::{Grid, GridMeasure};
use crate::linalg::{check_simplex, SymMatrix};
use crate::report::InequalityReport;
use crate::sharp_constant::encode_barycenter_form;

pub const GAUSSIAN_TOL: f64 = 1e-8;
pub const GRID_TOL: f64 = 2e-2;

/// Means up to this size are silently removed (with a note in the report).
pub const RECENTER_LIMIT: f64 = 1e-6;

/// A homogeneous list of input measures.
#[derive(Debug, Clone)]
pub enum Marginals {
    Gaussian(Vec<GaussianMeasure>),
    Discrete(Vec<DiscreteMeasure>),
    Grid(Vec<GridMeasure>),
}

impl Marginals {
    pub fn len(&self) -> usize {
        match self {
            Marginals::Gaussian(v) => v.len(),
            Marginals::Discrete(v) => v.len(),
            Marginals::Grid(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> &'static str {
        match self {
            Marginals::Gaussian(_) => "gaussian",
            Marginals::Discrete(_) => "discrete",
            Marginals::Grid(_) => "grid",
        }
    }

    fn default_tol(&self) -> f64 {
        match self {
            Marginals::Gaussian(_) => GAUSSIAN_TOL,
            _ => GRID_TOL,
        }
    }

    fn means(&self) -> Vec<DVector<f64>> {
        match self {
            Marginals::Gaussian(v) => v.iter().map(|g| g.mean().clone()).collect(),
            Marginals::Discrete(v) => v.iter().map(DiscreteMeasure::mean).collect(),
            Marginals::Grid(v) => v.iter().map(GridMeasure::mean).collect(),
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            Marginals::Gaussian(v) => v.iter().map(GaussianMeasure::dim).collect(),
            Marginals::Discrete(v) => v.iter().map(DiscreteMeasure::dim).collect(),
            Marginals::Grid(v) => v.iter().map(GridMeasure::dim).collect(),
        }
    }

    /// Removes means up to [`RECENTER_LIMIT`]; larger means are rejected.
    /// Returns whether anything was moved.
    pub fn centered(&self) -> Result<(Self, bool)> {
        let means = self.means();
        let worst = means.iter().map(|m| m.amax()).fold(0.0, f64::max);
        if worst > RECENTER_LIMIT {
            return Err(Error::HypothesisViolated(format!("measures must be centered, largest mean entry {worst:e}")));
        }
        if worst == 0.0 {
            return Ok((self.clone(), false));
        }
        let out = match self {
            Marginals::Gaussian(v) => Marginals::Gaussian(
                v.iter().map(|g| GaussianMeasure::centered(g.cov().clone())).collect::<Result<_>>()?,
            ),
            Marginals::Discrete(v) => {
                Marginals::Discrete(v.iter().zip(&means).map(|(m, c)| m.translated(&-c)).collect::<Result<_>>()?)
            }
            Marginals::Grid(v) => Marginals::Grid(v.iter().map(GridMeasure::centered).collect::<Result<_>>()?),
        };
        Ok((out, true))
    }
}

fn require_common_dim(m: &Marginals) -> Result<usize> {
    let dims = m.dims();
    let d = *dims.first().ok_or_else(|| Error::Invalid("no measures given".into()))?;
    if dims.iter().any(|&x| x != d) {
        return Err(Error::Dimension(format!("measures live in dimensions {dims:?}")));
    }
    Ok(d)
}

fn check_weights(m: &Marginals, lambda: &[f64]) -> Result<usize> {
    check_simplex(lambda)?;
    if lambda.len() != m.len() {
        return Err(Error::Dimension(format!("{} weights for {} measures", lambda.len(), m.len())));
    }
    require_common_dim(m)
}

fn grid_unsupported(what: &str) -> Error {
    Error::Invalid(format!("{what} takes Gaussian or discrete measures"))
}

/// `D(μ‖γ)` of a discrete measure after convolving with a Gaussian kernel of
/// bandwidth two cells on a grid covering the atoms plus a margin of 8
/// (4096 cells in one dimension, 256 per axis in two).
pub fn smoothed_relative_entropy(m: &DiscreteMeasure) -> Result<f64> {
    Ok(smoothed(m)?.relative_entropy())
}

fn smoothed(m: &DiscreteMeasure) -> Result<GridMeasure> {
    let d = m.dim();
    let lo = m.points().iter().flat_map(|p| p.iter().copied()).fold(0.0f64, f64::min) - 8.0;
    let hi = m.points().iter().flat_map(|p| p.iter().copied()).fold(0.0f64, f64::max) + 8.0;
    let gm = match d {
        1 => {
            let grid = Grid::line(lo, hi, 4096)?;
            let sigma = 2.0 * grid.spacing(0);
            let kernel = Normal::new(0.0, sigma).expect("positive bandwidth");
            GridMeasure::from_cdf(grid, |x| {
                m.points().iter().zip(m.weights()).map(|(p, w)| w * kernel.cdf(x - p[0])).sum()
            })?
        }
        2 => {
            let grid = Grid::square(lo, hi, 256)?;
            let sigma = 2.0 * grid.spacing(0);
            let kernel = Normal::new(0.0, sigma).expect("positive bandwidth");
            GridMeasure::from_pdf(grid, |x| {
                m.points()
                    .iter()
                    .zip(m.weights())
                    .map(|(p, w)| w * kernel.pdf(x[0] - p[0]) * kernel.pdf(x[1] - p[1]))
                    .sum()
            })?
        }
        _ => return Err(Error::Invalid(format!("smoothing supports d ≤ 2, got {d}"))),
    };
    Ok(gm)
}

fn relative_entropies(m: &Marginals) -> Result<Vec<f64>> {
    match m {
        Marginals::Gaussian(v) => Ok(v.iter().map(GaussianMeasure::relative_entropy).collect()),
        Marginals::Discrete(v) => v.iter().map(smoothed_relative_entropy).collect(),
        Marginals::Grid(v) => Ok(v.iter().map(GridMeasure::relative_entropy).collect()),
    }
}

/// `inf E Σ_{i<j} λ_iλ_j |X_i − X_j|²` over couplings.
fn pairwise_inf(m: &Marginals, lambda: &[f64]) -> Result<f64> {
    match m {
        Marginals::Gaussian(v) => {
            let d = v[0].dim();
            let p = encode_barycenter_form(lambda, d)?;
            let covs: Vec<SymMatrix> = v.iter().map(|g| g.cov().clone()).collect();
            let sup = max_coupling_gaussian(p.q(), &covs)?.value;
            let diag: f64 = v.iter().zip(lambda).map(|(g, l)| l * (1.0 - l) * g.cov().trace()).sum();
            Ok((diag - 2.0 * sup).max(0.0))
        }
        Marginals::Discrete(v) => Ok(mmot_exact(v, &CostSpec::Pairwise(lambda.to_vec()), Sense::Min)?.value.max(0.0)),
        Marginals::Grid(_) => Err(grid_unsupported("the multimarginal cost")),
    }
}

enum Bary {
    Gaussian(GaussianMeasure),
    Discrete(DiscreteMeasure),
}

fn barycenter_of(m: &Marginals, lambda: &[f64]) -> Result<Bary> {
    match m {
        Marginals::Gaussian(v) => Ok(Bary::Gaussian(barycenter_gaussian(lambda, v)?)),
        Marginals::Discrete(v) => Ok(Bary::Discrete(barycenter_discrete(lambda, v)?)),
        Marginals::Grid(_) => Err(grid_unsupported("the barycenter")),
    }
}

/// `Σ λ_i W2(μ_i, μ̄)²` at the barycenter `μ̄`.
fn barycenter_cost(m: &Marginals, lambda: &[f64], bar: &Bary) -> Result<f64> {
    let mut total = 0.0;
    match (m, bar) {
        (Marginals::Gaussian(v), Bary::Gaussian(b)) => {
            for (g, l) in v.iter().zip(lambda) {
                total += l * w2_squared_gaussian(g, b)?;
            }
        }
        (Marginals::Discrete(v), Bary::Discrete(b)) => {
            for (g, l) in v.iter().zip(lambda) {
                total += l * w2_squared_discrete(g, b)?;
            }
        }
        _ => unreachable!("barycenter computed from the same marginals"),
    }
    Ok(total)
}

fn bary_relative_entropy(b: &Bary) -> Result<f64> {
    match b {
        Bary::Gaussian(g) => Ok(g.relative_entropy()),
        Bary::Discrete(m) => smoothed_relative_entropy(m),
    }
}

fn annotate(report: &mut InequalityReport, m: &Marginals, recentered: bool) {
    report.insert_meta("input", m.kind());
    report.insert_meta("recentered", recentered);
    if matches!(m, Marginals::Discrete(_)) {
        report.insert_meta("relative_entropy", "smoothed");
    }
}

/// `min_ν Σ λ_i W2(μ_i, ν)² ≤ 2 Σ λ_i(1−λ_i) D(μ_i‖γ)` for centered inputs.
pub fn talagrand_barycenter_check(m: &Marginals, lambda: &[f64], tol: Option<f64>) -> Result<InequalityReport> {
    check_weights(m, lambda)?;
    let (m, recentered) = m.centered()?;
    let bar = barycenter_of(&m, lambda)?;
    let lhs = barycenter_cost(&m, lambda, &bar)?;
    let ds = relative_entropies(&m)?;
    let rhs = 2.0 * lambda.iter().zip(&ds).map(|(l, d)| l * (1.0 - l) * d).sum::<f64>();
    let mut r = InequalityReport::new("talagrand_barycenter", lhs, rhs, tol.unwrap_or(m.default_tol()));
    annotate(&mut r, &m, recentered);
    r.insert_meta("relative_entropies", json!(ds));
    Ok(r)
}

/// `½ inf E Σ_{i<j} λ_iλ_j |X_i − X_j|² ≤ Σ λ_i(1−λ_i) D(μ_i‖γ)`.
pub fn multimarginal_form_check(m: &Marginals, lambda: &[f64], tol: Option<f64>) -> Result<InequalityReport> {
    check_weights(m, lambda)?;
    let (m, recentered) = m.centered()?;
    let lhs = 0.5 * pairwise_inf(&m, lambda)?;
    let ds = relative_entropies(&m)?;
    let rhs = lambda.iter().zip(&ds).map(|(l, d)| l * (1.0 - l) * d).sum::<f64>();
    let mut r = InequalityReport::new("multimarginal_form", lhs, rhs, tol.unwrap_or(m.default_tol()));
    annotate(&mut r, &m, recentered);
    r.insert_meta("relative_entropies", json!(ds));
    Ok(r)
}

/// Barycenter cost `Σ λ_i W2(μ_i, μ̄)²` against the multimarginal value
/// `inf E Σ_{i<j} λ_iλ_j |X_i − X_j|²`; these agree. Discrete inputs also
/// compare the pushforward barycenter with the best measure supported on all
/// weighted means of atoms.
pub fn equivalence_check(m: &Marginals, lambda: &[f64], tol: Option<f64>) -> Result<InequalityReport> {
    check_weights(m, lambda)?;
    let bar = barycenter_of(m, lambda)?;
    let lhs = barycenter_cost(m, lambda, &bar)?;
    let rhs = pairwise_inf(m, lambda)?;
    let mut r = InequalityReport::new("equivalence", lhs, rhs, tol.unwrap_or(m.default_tol()));
    r.insert_meta("input", m.kind());
    if let Marginals::Discrete(v) = m {
        let direct = candidate_barycenter_value(lambda, v)?;
        r.insert_meta("candidate_support_value", direct);
        r.insert_meta("pushforward_residual", (direct - lhs).abs());
    }
    Ok(r)
}

/// `min_ν Σ λ_i W2(μ_i, ν)²` over `ν` supported on the points `Σ λ_i x_{i,k_i}`,
/// as one linear program in the transport plans.
fn candidate_barycenter_value(lambda: &[f64], marginals: &[DiscreteMeasure]) -> Result<f64> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let cells: u128 = marginals.iter().map(|m| m.len() as u128).product();
    if cells > 10_000 {
        return Err(Error::SizeGuard { cells, limit: 10_000 });
    }
    let shape: Vec<usize> = marginals.iter().map(DiscreteMeasure::len).collect();
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    for k in 0..cells as usize {
        let mut t = k;
        let mut y = DVector::zeros(marginals[0].dim());
        for i in (0..shape.len()).rev() {
            y += &marginals[i].points()[t % shape[i]] * lambda[i];
            t /= shape[i];
        }
        if !candidates.iter().any(|z| (z - &y).norm() <= 1e-12) {
            candidates.push(y);
        }
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let nu: Vec<_> = candidates.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (m, l) in marginals.iter().zip(lambda) {
        let plan: Vec<Vec<_>> = m
            .points()
            .iter()
            .map(|x| candidates.iter().map(|y| lp.add_var(l * (x - y).norm_squared(), (0.0, f64::INFINITY))).collect())
            .collect();
        for (row, w) in plan.iter().zip(m.weights()) {
            let expr: Vec<_> = row.iter().map(|v| (*v, 1.0)).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, *w);
        }
        for (c, v) in nu.iter().enumerate() {
            let mut expr: Vec<_> = plan.iter().map(|row| (row[c], 1.0)).collect();
            expr.push((*v, -1.0));
            lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, 0.0);
        }
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Solver(format!("candidate barycenter: {e}")))?
        .into_solution()
        .map_err(|e| Error::Solver(format!("candidate barycenter interrupted: {e:?}")))?;
    Ok(sol.objective())
}

/// `½ W2(μ, ν)² ≤ D(μ‖γ) + D(ν‖γ)` for centered `μ, ν`.
pub fn symm_talagrand_check(mu: &Marginals, tol: Option<f64>) -> Result<InequalityReport> {
    if mu.len() != 2 {
        return Err(Error::Dimension(format!("need exactly two measures, got {}", mu.len())));
    }
    require_common_dim(mu)?;
    let (m, recentered) = mu.centered()?;
    let w2 = match &m {
        Marginals::Gaussian(v) => w2_squared_gaussian(&v[0], &v[1])?,
        Marginals::Discrete(v) => w2_squared_discrete(&v[0], &v[1])?,
        Marginals::Grid(_) => return Err(grid_unsupported("symmetrized Talagrand")),
    };
    let ds = relative_entropies(&m)?;
    let mut r = InequalityReport::new("symm_talagrand", 0.5 * w2, ds[0] + ds[1], tol.unwrap_or(m.default_tol()));
    annotate(&mut r, &m, recentered);
    if let Marginals::Gaussian(v) = &m {
        let inverse_pair = v[0]
            .cov()
            .inverse_pd()
            .map(|inv| inv.sub(v[1].cov()).map(|d| d.max_abs() <= 1e-8).unwrap_or(false))
            .unwrap_or(false);
        r.insert_meta("equality_case", inverse_pair);
    }
    Ok(r)
}

/// `Σ λ_i D(μ_i‖γ) ≥ D(μ̄‖γ) + ½ inf E Σ_{i<j} λ_iλ_j |X_i − X_j|²`; here the
/// left side is the larger one.
pub fn displacement_convexity_check(m: &Marginals, lambda: &[f64], tol: Option<f64>) -> Result<InequalityReport> {
    check_weights(m, lambda)?;
    let (m, recentered) = m.centered()?;
    let ds = relative_entropies(&m)?;
    let lhs: f64 = lambda.iter().zip(&ds).map(|(l, d)| l * d).sum();
    let bar = barycenter_of(&m, lambda)?;
    let d_bar = bary_relative_entropy(&bar)?;
    let inf = pairwise_inf(&m, lambda)?;
    let rhs = d_bar + 0.5 * inf;
    let mut r =
        InequalityReport::with_deficit("displacement_convexity", lhs, rhs, lhs - rhs, tol.unwrap_or(m.default_tol()));
    annotate(&mut r, &m, recentered);
    r.insert_meta("barycenter_relative_entropy", d_bar);
    r.insert_meta("pairwise_inf", inf);
    Ok(r)
}

/// Residual of
/// `Σ_{i<j} λ_iλ_j |x_i − x_j|² = λ̄λ_{m}|x_m − x̄|² + λ̄ Σ_{i<j<m} λ'_iλ'_j |x_i − x_j|²`
/// where `m` is the last index, `λ̄ = 1 − λ_m`, `λ' = λ/λ̄` and `x̄ = Σ λ'_i x_i`,
/// relative to `max(1, |left side|)`.
pub fn quadratic_identity_check(lambda: &[f64], xs: &[Vec<f64>]) -> Result<f64> {
    check_simplex(lambda)?;
    let n1 = lambda.len();
    if n1 < 2 || xs.len() != n1 {
        return Err(Error::Dimension(format!("{} points for {n1} weights", xs.len())));
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::Dimension("points differ in dimension".into()));
    }
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    let mut lhs = 0.0;
    for i in 0..n1 {
        for j in i + 1..n1 {
            lhs += lambda[i] * lambda[j] * dist2(&xs[i], &xs[j]);
        }
    }
    let last = n1 - 1;
    let lbar = 1.0 - lambda[last];
    let lp: Vec<f64> = lambda[..last].iter().map(|l| l / lbar).collect();
    let mut xbar = vec![0.0; d];
    for (x, l) in xs[..last].iter().zip(&lp) {
        for (a, v) in xbar.iter_mut().zip(x) {
            *a += l * v;
        }
    }
    let mut inner = 0.0;
    for i in 0..last {
        for j in i + 1..last {
            inner += lp[i] * lp[j] * dist2(&xs[i], &xs[j]);
        }
    }
    let rhs = lbar * lambda[last] * dist2(&xs[last], &xbar) + lbar * inner;
    Ok((lhs - rhs).abs() / lhs.abs().max(1.0))
}

/// Largest [`quadratic_identity_check`] residual over random standard normal
/// points and random weights (`n1` weights, dimension `d`).
pub fn quadratic_identity_probe(n1: usize, d: usize, probes: usize, seed: u64) -> Result<f64> {
    if n1 < 2 || d == 0 {
        return Err(Error::Dimension(format!("need at least two points in positive dimension, got {n1}, {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let raw: Vec<f64> = (0..n1).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut lambda: Vec<f64> = raw.iter().map(|r| r / s).collect();
        let head: f64 = lambda[..n1 - 1].iter().sum();
        lambda[n1 - 1] = 1.0 - head;
        let xs: Vec<Vec<f64>> = (0..n1).map(|_| (0..d).map(|_| normal.inverse_cdf(rng.gen_range(1e-12..1.0))).collect()).collect();
        worst = worst.max(quadratic_identity_check(&lambda, &xs)?);
    }
    Ok(worst)
}

/// `Σ c_i h(μ_i) ≤ sup E⟨X, QX⟩ − ⟨τ, Qτ⟩ + D` with `τ` the concatenated means.
/// A declared `tau` must match the means.
pub fn entropy_inequality_check(
    m: &Marginals,
    c: &[f64],
    q: &QuadraticForm,
    d_constant: f64,
    tau: Option<&[f64]>,
    tol: Option<f64>,
) -> Result<InequalityReport> {
    if c.len() != m.len() || q.n() != m.len() {
        return Err(Error::Dimension(format!("{} weights and {} blocks for {} measures", c.len(), q.n(), m.len())));
    }
    for (i, d) in m.dims().into_iter().enumerate() {
        if d != q.blocks().dim(i) {
            return Err(Error::Dimension(format!("measure {i} has dimension {d}, block {}", q.blocks().dim(i))));
        }
    }
    let means: Vec<f64> = m.means().iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()).collect();
    if let Some(t) = tau {
        let off = t.len() != means.len() || t.iter().zip(&means).any(|(a, b)| (a - b).abs() > 1e-6 * (1.0 + b.abs()));
        if off {
            return Err(Error::Invalid(format!("declared means {t:?} differ from actual {means:?}")));
        }
    }
    let shift = q.eval(&means);
    let mut sup_exact = true;
    let (entropies, sup): (Vec<f64>, f64) = match m {
        Marginals::Gaussian(v) => {
            let covs: Vec<SymMatrix> = v.iter().map(|g| g.cov().clone()).collect();
            let hs = v.iter().map(GaussianMeasure::entropy).collect::<Result<_>>()?;
            (hs, max_coupling_gaussian(q, &covs)?.value + shift)
        }
        Marginals::Grid(v) => {
            let hs = v.iter().map(GridMeasure::entropy).collect();
            let sup = if q.blocks().dims().iter().all(|&d| d == 1) {
                let g = sup_coupling_grid(v, q)?;
                sup_exact = g.exact;
                g.value
            } else {
                let atoms = v.iter().map(GridMeasure::to_discrete).collect::<Result<Vec<_>>>()?;
                discrete_sup(&atoms, q)?
            };
            (hs, sup)
        }
        Marginals::Discrete(v) => {
            let hs = v
                .iter()
                .map(|x| smoothed(x).map(|g| g.entropy()))
                .collect::<Result<_>>()?;
            (hs, discrete_sup(v, q)?)
        }
    };
    let lhs: f64 = entropies.iter().zip(c).map(|(h, ci)| ci * h).sum();
    let rhs = sup - shift + d_constant;
    let mut r = InequalityReport::new("entropy_inequality", lhs, rhs, tol.unwrap_or(m.default_tol()));
    r.insert_meta("input", m.kind());
    r.insert_meta("sup_coupling", sup);
    r.insert_meta("sup_exact", sup_exact);
    r.insert_meta("mean_correction", shift);
    r.insert_meta("constant", d_constant);
    if matches!(m, Marginals::Discrete(_)) {
        r.insert_meta("entropy", "smoothed");
    }
    Ok(r)
}

fn discrete_sup(atoms: &[DiscreteMeasure], q: &QuadraticForm) -> Result<f64> {
    let cells: u128 = atoms.iter().map(|a| a.len() as u128).product();
    if cells > MMOT_CELL_LIMIT {
        return Err(Error::SizeGuard { cells, limit: MMOT_CELL_LIMIT });
    }
    Ok(mmot_exact(atoms, &CostSpec::Quadratic(q.clone()), Sense::Max)?.value)
}

/// The inductive argument for the multimarginal form at `n + 1 ≥ 3` centered
/// Gaussians, step by step. `meta.steps` holds the slack of each step:
/// restriction to the barycenter coupling, symmetrized Talagrand against the
/// barycenter of the first `n`, displacement convexity, and the inequality
/// for `n` marginals.
pub fn proof_chain_check(gs: &[GaussianMeasure], lambda: &[f64], tol: Option<f64>) -> Result<InequalityReport> {
    let all = Marginals::Gaussian(gs.to_vec());
    check_weights(&all, lambda)?;
    let n1 = gs.len();
    if n1 < 3 {
        return Err(Error::Dimension(format!("the chain needs at least three marginals, got {n1}")));
    }
    let (all, recentered) = all.centered()?;
    let Marginals::Gaussian(gs) = &all else { unreachable!() };
    let n = n1 - 1;
    let ln1 = lambda[n];
    let lbar = 1.0 - ln1;
    let lp: Vec<f64> = lambda[..n].iter().map(|l| l / lbar).collect();
    let head = Marginals::Gaussian(gs[..n].to_vec());

    let d_all: Vec<f64> = gs.iter().map(GaussianMeasure::relative_entropy).collect();
    let bar = barycenter_gaussian(&lp, &gs[..n])?;
    let d_bar = bar.relative_entropy();
    let w2 = w2_squared_gaussian(&gs[n], &bar)?;
    let inf_head = pairwise_inf(&head, &lp)?;
    let sum_head: f64 = lambda[..n].iter().zip(&d_all).map(|(l, d)| l * d).sum();
    let induct: f64 = lp.iter().zip(&d_all).map(|(l, d)| l * (1.0 - l) * d).sum();

    let t0 = 0.5 * pairwise_inf(&all, lambda)?;
    let t1 = 0.5 * lbar * ln1 * w2 + 0.5 * lbar * inf_head;
    let t2 = lbar * ln1 * (d_all[n] + d_bar) + 0.5 * lbar * inf_head;
    let t3 = lbar * ln1 * d_all[n] + ln1 * sum_head + 0.5 * lbar * lbar * inf_head;
    let t4 = lbar * ln1 * d_all[n] + ln1 * sum_head + lbar * lbar * induct;
    let closed: f64 = lambda.iter().zip(&d_all).map(|(l, d)| l * (1.0 - l) * d).sum();

    let steps = [t1 - t0, t2 - t1, t3 - t2, t4 - t3];
    let mut r = InequalityReport::new("proof_chain", t0, t4, tol.unwrap_or(GAUSSIAN_TOL));
    r.insert_meta("recentered", recentered);
    r.insert_meta("chain", json!([t0, t1, t2, t3, t4]));
    r.insert_meta("steps", json!(steps));
    r.insert_meta("min_step_slack", steps.iter().copied().fold(f64::INFINITY, f64::min));
    r.insert_meta("telescoping_residual", (t4 - closed).abs());
    Ok(r)
}
