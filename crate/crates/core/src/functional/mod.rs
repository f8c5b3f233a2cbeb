//! Potentials `f_i`, their barycenters, the pointwise constraint
//! `Σ c_i f_i(x_i) ≥ ⟨x, Qx⟩`, and the integral inequality it implies.

mod geometry;
mod potentials;

pub use geometry::{body_volume_via_layercake, geometry_check, minkowski, unit_ball_volume, ConvexBody};
pub use potentials::{random_feasible_potentials, GridFunction, Potential, Quadrature};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::couplings::{mmot_exact, sup_coupling_grid, CostSpec, QuadraticForm, Sense, MMOT_CELL_LIMIT};
use crate::error::{Error, Result};
use crate::report::InequalityReport;
use crate::sharp_constant::thread_pool;

/// Normalized first moment of `e^{−f}`.
pub fn fn_barycenter(f: &GridFunction) -> Result<DVector<f64>> {
    f.barycenter()
}

/// `⟨b, Qb⟩` at the concatenated barycenters `b = (bar f_1, …, bar f_n)`.
pub fn q_functional(fs: &[GridFunction], q: &QuadraticForm) -> Result<f64> {
    check_shapes(fs.iter().map(|f| f.grid().dim()), fs.len(), q)?;
    let mut b = Vec::new();
    for f in fs {
        b.extend(f.barycenter()?.iter().copied());
    }
    Ok(q.eval(&b))
}

fn check_shapes(dims: impl Iterator<Item = usize>, n: usize, q: &QuadraticForm) -> Result<()> {
    if n != q.n() {
        return Err(Error::Dimension(format!("{n} functions for {} blocks", q.n())));
    }
    for (i, d) in dims.enumerate() {
        if d != q.blocks().dim(i) {
            return Err(Error::Dimension(format!(
                "function {i} lives in dimension {d} but block has {}",
                q.blocks().dim(i)
            )));
        }
    }
    Ok(())
}

/// How the pointwise constraint is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSpec {
    /// Every point of the product of grids when there are at most `10^7`,
    /// otherwise `10^6` Latin-hypercube samples.
    Auto { seed: u64 },
    /// Latin-hypercube sampling with the given number of probes.
    Sampled { count: usize, seed: u64 },
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec::Auto { seed: 0 }
    }
}

const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    /// `min (Σ c_i f_i(x_i) − ⟨x, Qx⟩)` over the probes; `+∞` if every probe
    /// hits a point outside some support.
    pub min_margin: f64,
    /// Concatenated probe point attaining the minimum.
    pub witness: Option<Vec<f64>>,
    pub probes: u128,
    pub exhaustive: bool,
}

/// Worst margin of the pointwise constraint over cell centers of the grids.
pub fn feasibility_check(fs: &[GridFunction], c: &[f64], q: &QuadraticForm, probes: ProbeSpec) -> Result<Feasibility> {
    check_shapes(fs.iter().map(|f| f.grid().dim()), fs.len(), q)?;
    if c.len() != fs.len() {
        return Err(Error::Dimension(format!("{} weights for {} functions", c.len(), fs.len())));
    }
    let sizes: Vec<usize> = fs.iter().map(|f| f.grid().len()).collect();
    let total: u128 = sizes.iter().map(|&s| s as u128).product();
    let centers: Vec<Vec<Vec<f64>>> = fs
        .iter()
        .map(|f| (0..f.grid().len()).map(|k| f.grid().center(k)).collect())
        .collect();
    let margin_at = |idx: &[usize], x: &mut Vec<f64>| -> Option<f64> {
        let mut lhs = 0.0;
        x.clear();
        for (i, &k) in idx.iter().enumerate() {
            lhs += c[i] * fs[i].values()[k]?;
            x.extend_from_slice(&centers[i][k]);
        }
        Some(lhs - q.eval(x))
    };
    // Strict comparison keeps the first minimizer in probe order.
    let better = |a: Option<(f64, Vec<usize>)>, b: Option<(f64, Vec<usize>)>| match (a, b) {
        (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };

    let (exhaustive, count, seed) = match probes {
        ProbeSpec::Auto { seed } if total <= EXHAUSTIVE_LIMIT => (true, total, seed),
        ProbeSpec::Auto { seed } => (false, 1_000_000, seed),
        ProbeSpec::Sampled { count, seed } => (false, count as u128, seed),
    };
    let best = if exhaustive {
        let rest: usize = sizes[1..].iter().product();
        thread_pool()
            .install(|| {
                (0..sizes[0])
                    .into_par_iter()
                    .map(|first| {
                        let mut best: Option<(f64, Vec<usize>)> = None;
                        let mut idx = vec![0usize; sizes.len()];
                        let mut x = Vec::new();
                        idx[0] = first;
                        for r in 0..rest {
                            let mut t = r;
                            for a in (1..sizes.len()).rev() {
                                idx[a] = t % sizes[a];
                                t /= sizes[a];
                            }
                            if let Some(m) = margin_at(&idx, &mut x) {
                                if best.as_ref().is_none_or(|b| m < b.0) {
                                    best = Some((m, idx.clone()));
                                }
                            }
                        }
                        best
                    })
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .fold(None, better)
    } else {
        let count = count as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // One stratified permutation per function.
        let strata: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&s| {
                let mut perm: Vec<usize> = (0..count).collect();
                for k in (1..count).rev() {
                    perm.swap(k, rng.gen_range(0..=k));
                }
                perm.into_iter()
                    .map(|p| (((p as f64 + rng.gen::<f64>()) / count as f64 * s as f64) as usize).min(s - 1))
                    .collect()
            })
            .collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut idx = vec![0usize; sizes.len()];
        let mut x = Vec::new();
        for k in 0..count {
            for (a, st) in strata.iter().enumerate() {
                idx[a] = st[k];
            }
            if let Some(m) = margin_at(&idx, &mut x) {
                if best.as_ref().is_none_or(|b| m < b.0) {
                    best = Some((m, idx.clone()));
                }
            }
        }
        best
    };
    let best = best.map(|(m, idx)| {
        let x: Vec<f64> = idx.iter().enumerate().flat_map(|(i, &k)| centers[i][k].clone()).collect();
        (m, x)
    });
    Ok(match best {
        Some((m, x)) => Feasibility { min_margin: m, witness: Some(x), probes: count, exhaustive },
        None => Feasibility { min_margin: f64::INFINITY, witness: None, probes: count, exhaustive },
    })
}

fn require_feasible(fs: &[GridFunction], c: &[f64], q: &QuadraticForm, probes: ProbeSpec) -> Result<Feasibility> {
    let feas = feasibility_check(fs, c, q, probes)?;
    if feas.min_margin < -1e-9 {
        return Err(Error::HypothesisViolated(format!(
            "pointwise constraint fails with margin {:e} at {:?}",
            feas.min_margin,
            feas.witness.as_deref().unwrap_or(&[])
        )));
    }
    Ok(feas)
}

#[derive(Debug, Clone)]
pub struct BsOptions {
    pub tol: f64,
    /// Richardson stopping rule, relative.
    pub rel_tol: f64,
    pub probes: ProbeSpec,
}

impl Default for BsOptions {
    fn default() -> Self {
        Self { tol: 1e-6, rel_tol: 1e-4, probes: ProbeSpec::default() }
    }
}

/// `Π(∫e^{−f_i})^{c_i}` against `e^{D − Q(f)}`; the deficit is the log ratio.
pub fn bs_inequality_check(
    fs: &[Potential],
    c: &[f64],
    q: &QuadraticForm,
    dg: f64,
    opts: &BsOptions,
) -> Result<InequalityReport> {
    let sampled: Vec<GridFunction> = fs.iter().map(Potential::sample).collect::<Result<_>>()?;
    let feas = require_feasible(&sampled, c, q, opts.probes)?;
    let quads: Vec<Quadrature> = fs.iter().map(|f| f.integrate(opts.rel_tol)).collect::<Result<_>>()?;
    let mut bar = Vec::new();
    let mut log_lhs = 0.0;
    let mut rel_err = 0.0;
    for (qd, ci) in quads.iter().zip(c) {
        log_lhs += ci * qd.mass.ln();
        rel_err += ci * qd.error / qd.mass;
        bar.extend(qd.barycenter().iter().copied());
    }
    let q_value = q.eval(&bar);
    let bar_err: f64 = quads.iter().map(|qd| qd.moment_error / qd.mass).fold(0.0, f64::max);
    let grad = q.matrix().as_matrix() * DVector::from_column_slice(&bar) * 2.0;
    let q_err = grad.amax() * bar_err * bar.len() as f64;
    let log_rhs = dg - q_value;
    let mut report = InequalityReport::with_deficit(
        "bs_inequality",
        log_lhs.exp(),
        log_rhs.exp(),
        log_rhs - log_lhs,
        opts.tol,
    );
    report.insert_meta("deficit_kind", "log_ratio");
    report.insert_meta("q_functional", q_value);
    report.insert_meta("barycenters", json!(bar));
    report.insert_meta("quadrature_error", rel_err + q_err);
    report.insert_meta("quadrature_cells", json!(quads.iter().map(|qd| qd.cells).collect::<Vec<_>>()));
    report.insert_meta("feasibility_margin", feas.min_margin);
    report.insert_meta("feasibility_probes", feas.probes as f64);
    report.insert_meta("feasibility_exhaustive", feas.exhaustive);
    report.insert_meta("constant", dg);
    Ok(report)
}

/// Entropy side for the Gibbs measures `μ_i ∝ e^{−f_i}`:
/// `Σ c_i h(μ_i) ≤ sup E⟨X, QX⟩ − ⟨τ, Qτ⟩ + D` with `τ` the means.
pub fn duality_transfer(
    fs: &[Potential],
    c: &[f64],
    q: &QuadraticForm,
    dg: f64,
    tol: f64,
) -> Result<InequalityReport> {
    let sampled: Vec<GridFunction> = fs.iter().map(Potential::sample).collect::<Result<_>>()?;
    let feas = require_feasible(&sampled, c, q, ProbeSpec::default())?;
    let measures = sampled.iter().map(GridFunction::to_measure).collect::<Result<Vec<_>>>()?;
    let mut tau = Vec::new();
    for m in &measures {
        tau.extend(m.mean().iter().copied());
    }
    let entropy_side: f64 = measures.iter().zip(c).map(|(m, ci)| ci * m.entropy()).sum();
    let (sup, exact) = if q.blocks().dims().iter().all(|&d| d == 1) {
        let r = sup_coupling_grid(&measures, q)?;
        (r.value, r.exact)
    } else {
        let atoms = measures.iter().map(|m| m.to_discrete()).collect::<Result<Vec<_>>>()?;
        let cells: u128 = atoms.iter().map(|a| a.len() as u128).product();
        if cells > MMOT_CELL_LIMIT {
            return Err(Error::SizeGuard { cells, limit: MMOT_CELL_LIMIT });
        }
        (mmot_exact(&atoms, &CostSpec::Quadratic(q.clone()), Sense::Max)?.value, false)
    };
    let shift = q.eval(&tau);
    let rhs = sup - shift + dg;

    // Gibbs variational identity h(μ) = log ∫e^{−f} + ∫f dμ, on the grid.
    let mut gibbs = 0.0;
    let mut mean_potential = 0.0;
    for ((f, m), ci) in sampled.iter().zip(&measures).zip(c) {
        let masses = m.masses();
        let fbar: f64 = f
            .values()
            .iter()
            .zip(&masses)
            .filter(|(_, w)| **w > 0.0)
            .map(|(v, w)| w * v.expect("charged cells have finite potential"))
            .sum();
        mean_potential += ci * fbar;
        gibbs += ci * (m.entropy() - f.integral_exp().ln() - fbar);
    }
    let mut report = InequalityReport::new("duality_transfer", entropy_side, rhs, tol);
    report.insert_meta("sup_coupling", sup);
    report.insert_meta("sup_exact", exact);
    report.insert_meta("mean_correction", shift);
    report.insert_meta("constant", dg);
    report.insert_meta("gibbs_identity_residual", gibbs.abs());
    report.insert_meta("pointwise_slack", mean_potential - sup);
    report.insert_meta("feasibility_margin", feas.min_margin);
    Ok(report)
}
