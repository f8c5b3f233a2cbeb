//! Piecewise-constant densities on regular 1D/2D grids and the doubling map.

use std::f64::consts::{E, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::couplings::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Regular axis-aligned grid, row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if !(1..=2).contains(&d) || hi.len() != d || cells.len() != d {
            return Err(Error::Dimension("grids are one- or two-dimensional".into()));
        }
        for a in 0..d {
            if !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(Error::NonFinite("grid bounds"));
            }
            if lo[a] >= hi[a] || cells[a] == 0 {
                return Err(Error::Invalid(format!(
                    "axis {a}: need lo < hi and at least one cell, got [{}, {}] with {} cells",
                    lo[a], hi[a], cells[a]
                )));
            }
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn line(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![cells])
    }

    pub fn square(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::new(vec![lo, lo], vec![hi, hi], vec![cells, cells])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn axis_center(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + (k as f64 + 0.5) * self.spacing(axis)
    }

    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        (0..self.cells[axis]).map(|k| self.axis_center(axis, k)).collect()
    }

    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        crate::couplings::unflatten(&self.cells, k)
    }

    pub fn center(&self, k: usize) -> Vec<f64> {
        self.multi_index(k)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_center(a, i))
            .collect()
    }

    /// Same box with every cell split in two along each axis.
    pub fn refined(&self) -> Self {
        Self { lo: self.lo.clone(), hi: self.hi.clone(), cells: self.cells.iter().map(|c| 2 * c).collect() }
    }

    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim() {
            return Err(Error::Dimension("translation has the wrong dimension".into()));
        }
        Self::new(
            self.lo.iter().zip(v).map(|(l, t)| l + t).collect(),
            self.hi.iter().zip(v).map(|(h, t)| h + t).collect(),
            self.cells.clone(),
        )
    }
}

const GAUSS3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Probability measure with a density that is constant on each grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: Grid,
    density: Vec<f64>,
}

impl GridMeasure {
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} density values for {} cells",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Invalid("density must be finite and nonnegative".into()));
        }
        let mass: f64 = density.iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("density integrates to {mass}, expected 1")));
        }
        Ok(Self { grid, density })
    }

    /// Normalizes nonnegative cell masses.
    pub fn from_masses(grid: Grid, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::Dimension(format!("{} masses for {} cells", masses.len(), grid.len())));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Invalid("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        let vol = grid.cell_volume();
        let density = masses.iter().map(|m| m / total / vol).collect();
        Ok(Self { grid, density })
    }

    /// Cell averages of an unnormalized density by 3-point Gauss-Legendre per axis.
    pub fn from_pdf(grid: Grid, pdf: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
        let masses = (0..grid.len())
            .map(|k| {
                let c = grid.center(k);
                let mut acc = 0.0;
                match d {
                    1 => {
                        for (x, w) in GAUSS3 {
                            acc += w / 2.0 * pdf(&[c[0] + 0.5 * h[0] * x]);
                        }
                    }
                    _ => {
                        for (x, wx) in GAUSS3 {
                            for (y, wy) in GAUSS3 {
                                acc += wx * wy / 4.0 * pdf(&[c[0] + 0.5 * h[0] * x, c[1] + 0.5 * h[1] * y]);
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        Self::from_masses(grid, masses)
    }

    /// Exact cell masses from a cumulative distribution function (1D).
    pub fn from_cdf(grid: Grid, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Dimension("cdf construction is one-dimensional".into()));
        }
        let h = grid.spacing(0);
        let lo = grid.lo()[0];
        let n = grid.cells()[0];
        let masses = (0..n)
            .map(|k| (cdf(lo + (k + 1) as f64 * h) - cdf(lo + k as f64 * h)).max(0.0))
            .collect();
        Self::from_masses(grid, masses)
    }

    pub fn gaussian_1d(grid: Grid, mean: f64, var: f64) -> Result<Self> {
        let nd = Normal::new(mean, var.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
        Self::from_cdf(grid, |x| nd.cdf(x))
    }

    /// Uniform density on `[a, b]`, exact on partially covered cells.
    pub fn uniform_1d(grid: Grid, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Invalid("uniform needs a < b".into()));
        }
        Self::from_cdf(grid, |x| ((x - a) / (b - a)).clamp(0.0, 1.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn masses(&self) -> Vec<f64> {
        let v = self.grid.cell_volume();
        self.density.iter().map(|r| r * v).collect()
    }

    /// `−∫ρ log ρ` of the piecewise-constant density.
    pub fn entropy(&self) -> f64 {
        let v = self.grid.cell_volume();
        -self.density.iter().filter(|&&r| r > 0.0).map(|r| r * r.ln()).sum::<f64>() * v
    }

    /// Midpoint-rule mean and covariance (cell masses at cell centers).
    pub fn moments(&self) -> (DVector<f64>, SymMatrix) {
        let d = self.dim();
        let masses = self.masses();
        let mut mean = DVector::zeros(d);
        for (k, m) in masses.iter().enumerate() {
            if *m > 0.0 {
                mean += DVector::from_vec(self.grid.center(k)) * *m;
            }
        }
        let mut cov = DMatrix::zeros(d, d);
        for (k, m) in masses.iter().enumerate() {
            if *m > 0.0 {
                let x = DVector::from_vec(self.grid.center(k)) - &mean;
                cov += &x * x.transpose() * *m;
            }
        }
        (mean, SymMatrix::symmetrized(cov))
    }

    pub fn mean(&self) -> DVector<f64> {
        self.moments().0
    }

    /// Covariance of the piecewise-constant density itself: midpoint
    /// covariance plus the in-cell term `h_a²/12` on the diagonal.
    pub fn continuous_covariance(&self) -> SymMatrix {
        let (_, cov) = self.moments();
        let h2: Vec<f64> = (0..self.dim()).map(|a| self.grid.spacing(a).powi(2) / 12.0).collect();
        let mut m = cov.into_inner();
        for (a, t) in h2.iter().enumerate() {
            m[(a, a)] += t;
        }
        SymMatrix::symmetrized(m)
    }

    /// Relative entropy of the piecewise-constant density with respect to γ.
    pub fn relative_entropy(&self) -> f64 {
        let (mean, _) = self.moments();
        let cov = self.continuous_covariance();
        let second = cov.trace() + mean.norm_squared();
        let d = self.dim() as f64;
        (-self.entropy() + 0.5 * d * (2.0 * PI).ln() + 0.5 * second).max(0.0)
    }

    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        Ok(Self { grid: self.grid.translated(v)?, density: self.density.clone() })
    }

    /// Translates so that the mean is exactly zero.
    pub fn centered(&self) -> Result<Self> {
        let m = self.mean();
        let v: Vec<f64> = m.iter().map(|x| -x).collect();
        self.translated(&v)
    }

    /// Law of `−X`.
    pub fn reflected(&self) -> Self {
        let grid = Grid {
            lo: self.grid.hi.iter().map(|x| -x).collect(),
            hi: self.grid.lo.iter().map(|x| -x).collect(),
            cells: self.grid.cells.clone(),
        };
        let mut density = self.density.clone();
        density.reverse();
        Self { grid, density }
    }

    /// Atoms at the centers of cells with positive mass.
    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        let masses = self.masses();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (k, m) in masses.iter().enumerate() {
            if *m > 0.0 {
                points.push(DVector::from_vec(self.grid.center(k)));
                weights.push(*m);
            }
        }
        DiscreteMeasure::normalized(points, weights)
    }

    /// `‖ρ(x) − ρ(−x)‖₁` on a grid symmetric about the origin (1D).
    pub fn asymmetry(&self) -> Result<f64> {
        if self.dim() != 1 || (self.grid.lo[0] + self.grid.hi[0]).abs() > 1e-12 * self.grid.hi[0].abs() {
            return Err(Error::Invalid("asymmetry needs a 1D grid symmetric about 0".into()));
        }
        let n = self.density.len();
        let h = self.grid.spacing(0);
        Ok((0..n).map(|k| (self.density[k] - self.density[n - 1 - k]).abs()).sum::<f64>() * h)
    }
}

pub fn grid_entropy(m: &GridMeasure) -> f64 {
    m.entropy()
}

pub fn grid_moments(m: &GridMeasure) -> (DVector<f64>, SymMatrix) {
    m.moments()
}

/// Where mass of one summed-cell index lands after the `1/√2` rescaling:
/// first destination cell and the fraction in each consecutive cell.
struct Spread {
    first: isize,
    weights: Vec<f64>,
}

fn triangle_cdf(t: f64, h: f64) -> f64 {
    if t <= -h {
        0.0
    } else if t <= 0.0 {
        (t + h).powi(2) / (2.0 * h * h)
    } else if t < h {
        1.0 - (h - t).powi(2) / (2.0 * h * h)
    } else {
        1.0
    }
}

/// Per-axis spreads: `X + X'` given the summed centers is that sum plus a
/// triangular variable on `[−h, h]`; then divide by `√2`.
fn axis_spreads(lo: f64, h: f64, n: usize) -> Vec<Spread> {
    (0..2 * n - 1)
        .map(|s| {
            let sigma = 2.0 * lo + (s as f64 + 1.0) * h;
            let y0 = (sigma - h) / SQRT_2;
            let y1 = (sigma + h) / SQRT_2;
            let j0 = ((y0 - lo) / h).floor() as isize;
            let j1 = ((y1 - lo) / h).floor() as isize;
            let weights = (j0..=j1)
                .map(|j| {
                    let a = lo + j as f64 * h;
                    triangle_cdf(SQRT_2 * (a + h) - sigma, h) - triangle_cdf(SQRT_2 * a - sigma, h)
                })
                .collect();
            Spread { first: j0, weights }
        })
        .collect()
}

fn self_convolve(masses: &[f64], cells: &[usize]) -> (Vec<f64>, Vec<usize>) {
    match cells.len() {
        1 => {
            let n = cells[0];
            let nz: Vec<(usize, f64)> = masses.iter().copied().enumerate().filter(|(_, m)| *m > 0.0).collect();
            let mut out = vec![0.0; 2 * n - 1];
            for &(a, ma) in &nz {
                for &(b, mb) in &nz {
                    out[a + b] += ma * mb;
                }
            }
            (out, vec![2 * n - 1])
        }
        _ => {
            let (n0, n1) = (cells[0], cells[1]);
            let (s0, s1) = (2 * n0 - 1, 2 * n1 - 1);
            let nz: Vec<(usize, usize, f64)> = masses
                .iter()
                .enumerate()
                .filter(|(_, m)| **m > 0.0)
                .map(|(k, m)| (k / n1, k % n1, *m))
                .collect();
            let mut out = vec![0.0; s0 * s1];
            for &(a0, a1, ma) in &nz {
                for &(b0, b1, mb) in &nz {
                    out[(a0 + b0) * s1 + a1 + b1] += ma * mb;
                }
            }
            (out, vec![s0, s1])
        }
    }
}

/// Law of `(X + X')/√2` for independent copies with the given density.
///
/// The convolution of the piecewise-constant density is computed exactly and
/// averaged over the cells; a final exponential tilt restores the mean and
/// covariance lost to that averaging.
pub fn doubling_step(m: &GridMeasure) -> Result<GridMeasure> {
    let grid = m.grid().clone();
    let d = grid.dim();
    let cells = grid.cells().to_vec();
    let masses = m.masses();
    check_edges(&grid, &masses)?;

    let (sums, sum_shape) = self_convolve(&masses, &cells);
    let spreads: Vec<Vec<Spread>> =
        (0..d).map(|a| axis_spreads(grid.lo()[a], grid.spacing(a), cells[a])).collect();

    let mut out = vec![0.0; grid.len()];
    let mut lost = 0.0;
    let mut edge_fold = |out: &mut Vec<f64>, js: &[isize], w: f64| {
        let mut k = 0usize;
        let mut outside = false;
        for a in 0..d {
            let j = js[a];
            if j < 0 || j >= cells[a] as isize {
                outside = true;
            }
            k = k * cells[a] + j.clamp(0, cells[a] as isize - 1) as usize;
        }
        if outside {
            lost += w;
        }
        out[k] += w;
    };
    for (s, &r) in sums.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        match d {
            1 => {
                let sp = &spreads[0][s];
                for (t, w) in sp.weights.iter().enumerate() {
                    edge_fold(&mut out, &[sp.first + t as isize], r * w);
                }
            }
            _ => {
                let (s0, s1) = (s / sum_shape[1], s % sum_shape[1]);
                let (sp0, sp1) = (&spreads[0][s0], &spreads[1][s1]);
                for (t0, w0) in sp0.weights.iter().enumerate() {
                    for (t1, w1) in sp1.weights.iter().enumerate() {
                        edge_fold(&mut out, &[sp0.first + t0 as isize, sp1.first + t1 as isize], r * w0 * w1);
                    }
                }
            }
        }
    }
    if lost > 1e-9 {
        return Err(Error::DomainTooSmall(format!("{lost:e} of the doubled mass leaves the grid")));
    }

    let (mean_in, cov_in) = m.moments();
    let target_mean: Vec<f64> = mean_in.iter().map(|x| SQRT_2 * x).collect();
    let tilted = moment_tilt(&grid, &out, &target_mean, &cov_in)?;
    GridMeasure::from_masses(grid, tilted)
}

fn check_edges(grid: &Grid, masses: &[f64]) -> Result<()> {
    let cells = grid.cells();
    let mut edge = 0.0;
    for (k, m) in masses.iter().enumerate() {
        let idx = grid.multi_index(k);
        if idx.iter().zip(cells).any(|(&i, &n)| i == 0 || i + 1 == n) {
            edge += m;
        }
    }
    if edge > 1e-9 {
        return Err(Error::DomainTooSmall(format!("{edge:e} of the mass sits in boundary cells")));
    }
    Ok(())
}

/// Exponential tilt `m_k e^{θ·φ(x_k)}` matching the target midpoint mean and
/// covariance; the I-projection onto that moment set.
fn moment_tilt(grid: &Grid, masses: &[f64], mean: &[f64], cov: &SymMatrix) -> Result<Vec<f64>> {
    let d = grid.dim();
    let support: Vec<(usize, Vec<f64>)> = masses
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, _)| {
            let x: Vec<f64> = grid.center(k).iter().zip(mean).map(|(c, t)| c - t).collect();
            let mut phi = x.clone();
            for a in 0..d {
                for b in a..d {
                    phi.push(x[a] * x[b] - cov.get(a, b));
                }
            }
            (k, phi)
        })
        .collect();
    let p = support.first().map_or(0, |s| s.1.len());
    let scale = 1.0 + cov.max_abs();
    let mut theta = DVector::zeros(p);
    let weights = |theta: &DVector<f64>| -> Vec<f64> {
        let expo: Vec<f64> = support.iter().map(|(_, phi)| phi.iter().zip(theta.iter()).map(|(a, b)| a * b).sum()).collect();
        let mx = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = support.iter().zip(&expo).map(|((k, _), e)| masses[*k] * (e - mx).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    for _ in 0..100 {
        let w = weights(&theta);
        let mut g = DVector::zeros(p);
        for ((_, phi), wk) in support.iter().zip(&w) {
            g += DVector::from_column_slice(phi) * *wk;
        }
        if g.amax() <= 1e-15 * scale {
            break;
        }
        let mut hess = DMatrix::zeros(p, p);
        for ((_, phi), wk) in support.iter().zip(&w) {
            let v = DVector::from_column_slice(phi) - &g;
            hess += &v * v.transpose() * *wk;
        }
        let step = hess
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::Solver("moment projection has a singular Hessian".into()))?;
        let before = g.amax();
        theta -= step;
        let w2 = weights(&theta);
        let mut g2 = DVector::zeros(p);
        for ((_, phi), wk) in support.iter().zip(&w2) {
            g2 += DVector::from_column_slice(phi) * *wk;
        }
        if g2.amax() >= before {
            break;
        }
    }
    let w = weights(&theta);
    let mut out = vec![0.0; masses.len()];
    for ((k, _), wk) in support.iter().zip(w) {
        out[*k] = wk;
    }
    Ok(out)
}

/// W2 from a 1D grid measure to `N(mean, var)` through the quantile coupling.
pub fn w2_to_gaussian_1d(m: &GridMeasure, mean: f64, var: f64) -> Result<f64> {
    if m.dim() != 1 {
        return Err(Error::Dimension("quantile coupling is one-dimensional".into()));
    }
    let nd = Normal::new(mean, var.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
    const GL5: [(f64, f64); 5] = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let g = m.grid();
    let h = g.spacing(0);
    let mut cum = 0.0;
    let mut acc = 0.0;
    for (k, &rho) in m.density().iter().enumerate() {
        if rho <= 0.0 {
            continue;
        }
        let a = g.lo()[0] + k as f64 * h;
        for (t, w) in GL5 {
            let s = 0.5 * (t + 1.0);
            let x = a + s * h;
            let u = (cum + rho * s * h).clamp(1e-300, 1.0 - 1e-16);
            let y = nd.inverse_cdf(u);
            acc += 0.5 * w * h * rho * (x - y).powi(2);
        }
        cum += rho * h;
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FlowPoint {
    pub step: usize,
    pub entropy: f64,
    /// Distance to the Gaussian with the same mean and covariance (1D only).
    pub w2: Option<f64>,
    /// Trace of the covariance.
    pub var: f64,
    /// Entropy gap to that Gaussian.
    pub deficit: f64,
}

/// Iterates [`doubling_step`], recording the state before the first step and
/// after each one.
pub fn clt_flow(m: &GridMeasure, steps: usize) -> Result<Vec<FlowPoint>> {
    if steps > 20 {
        return Err(Error::Invalid(format!("at most 20 doubling steps, got {steps}")));
    }
    let mut trace = Vec::with_capacity(steps + 1);
    let mut cur = m.clone();
    for step in 0..=steps {
        if step > 0 {
            cur = doubling_step(&cur)?;
        }
        let cov = cur.continuous_covariance();
        let d = cur.dim() as f64;
        let gauss = 0.5 * d * (2.0 * PI * E).ln() + 0.5 * cov.logdet()?;
        let entropy = cur.entropy();
        let w2 = if cur.dim() == 1 {
            Some(w2_to_gaussian_1d(&cur, cur.mean()[0], cov.get(0, 0))?)
        } else {
            None
        };
        trace.push(FlowPoint { step, entropy, w2, var: cov.trace(), deficit: gauss - entropy });
    }
    Ok(trace)
}
