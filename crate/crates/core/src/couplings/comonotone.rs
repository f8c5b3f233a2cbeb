//! Monotone couplings of one-dimensional marginals.
//!
//! For a form whose off-diagonal entries can be made nonnegative by flipping
//! the signs of some coordinates, every cross term is maximized by the same
//! quantile coupling, so the supremum is attained there.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::{mmot_exact, CostSpec, DiscreteMeasure, QuadraticForm, Sense};
use crate::error::{Error, Result};
use crate::grid::GridMeasure;

/// Signs `s_i ∈ {±1}` with `s_i s_j Q_ij ≥ 0` for all `i ≠ j`, when they exist.
/// Only for forms with one-dimensional blocks.
pub fn sign_pattern(q: &QuadraticForm) -> Option<Vec<f64>> {
    let n = q.n();
    if q.blocks().dims().iter().any(|&d| d != 1) {
        return None;
    }
    let m = q.matrix();
    let tiny = 1e-15 * (1.0 + m.max_abs());
    let mut sign = vec![0.0; n];
    for root in 0..n {
        if sign[root] != 0.0 {
            continue;
        }
        sign[root] = 1.0;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let qij = m.get(i, j);
                if j == i || qij.abs() <= tiny {
                    continue;
                }
                let want = sign[i] * qij.signum();
                if sign[j] == 0.0 {
                    sign[j] = want;
                    queue.push_back(j);
                } else if sign[j] != want {
                    return None;
                }
            }
        }
    }
    Some(sign)
}

/// North-west corner coupling of one-dimensional atoms sorted increasingly.
/// Returns `(atom index per marginal, mass)` for every charged cell.
pub fn comonotone_coupling(marginals: &[DiscreteMeasure]) -> Result<Vec<(Vec<usize>, f64)>> {
    if marginals.iter().any(|m| m.dim() != 1) {
        return Err(Error::Dimension("monotone couplings are one-dimensional".into()));
    }
    let orders: Vec<Vec<usize>> = marginals
        .iter()
        .map(|m| {
            let mut o: Vec<usize> = (0..m.len()).collect();
            o.sort_by(|&a, &b| m.points()[a][0].total_cmp(&m.points()[b][0]));
            o
        })
        .collect();
    let n = marginals.len();
    let mut pos = vec![0usize; n];
    let mut left: Vec<f64> = (0..n).map(|i| marginals[i].weights()[orders[i][0]]).collect();
    let mut cells = Vec::new();
    loop {
        let take = left.iter().copied().fold(f64::INFINITY, f64::min);
        if take > 0.0 {
            cells.push(((0..n).map(|i| orders[i][pos[i]]).collect(), take));
        }
        let mut advanced = false;
        for i in 0..n {
            left[i] -= take;
            if left[i] <= 1e-15 && pos[i] + 1 < marginals[i].len() {
                pos[i] += 1;
                left[i] += marginals[i].weights()[orders[i][pos[i]]];
                advanced = true;
            }
        }
        if !advanced {
            break;
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCoupling {
    pub value: f64,
    /// `true` when the value is the exact supremum, `false` for the
    /// coarsened lower bound.
    pub exact: bool,
    pub signs: Option<Vec<f64>>,
}

/// One linear piece of a quantile function: on `[u0, u1]`, `x` runs from `x0` to `x1`.
struct Piece {
    u0: f64,
    u1: f64,
    x0: f64,
    x1: f64,
}

impl Piece {
    fn at(&self, u: f64) -> f64 {
        if self.u1 > self.u0 {
            self.x0 + (self.x1 - self.x0) * (u - self.u0) / (self.u1 - self.u0)
        } else {
            self.x0
        }
    }
}

fn quantile_pieces(m: &GridMeasure) -> Vec<Piece> {
    let g = m.grid();
    let h = g.spacing(0);
    let lo = g.lo()[0];
    let mut cum = 0.0;
    let mut out = Vec::new();
    for (k, mass) in m.masses().into_iter().enumerate() {
        if mass <= 0.0 {
            continue;
        }
        let x0 = lo + k as f64 * h;
        out.push(Piece { u0: cum, u1: cum + mass, x0, x1: x0 + h });
        cum += mass;
    }
    if let Some(last) = out.last_mut() {
        last.u1 = last.u1.max(1.0);
    }
    out
}

/// `sup E⟨X, QX⟩` over couplings of one-dimensional grid measures.
///
/// Exact (quantile coupling of the sign-flipped coordinates) when a sign
/// pattern exists; otherwise a lower bound from the exact solver on
/// coarsened marginals, with exact diagonal terms.
pub fn sup_coupling_grid(marginals: &[GridMeasure], q: &QuadraticForm) -> Result<GridCoupling> {
    let n = marginals.len();
    if q.n() != n {
        return Err(Error::Dimension(format!("form has {} blocks for {n} marginals", q.n())));
    }
    if marginals.iter().any(|m| m.dim() != 1) || q.blocks().dims().iter().any(|&d| d != 1) {
        return Err(Error::Dimension("grid couplings are one-dimensional".into()));
    }
    let second: Vec<f64> = marginals
        .iter()
        .map(|m| m.continuous_covariance().get(0, 0) + m.mean()[0].powi(2))
        .collect();
    let qm = q.matrix();
    if let Some(signs) = sign_pattern(q) {
        let flipped: Vec<GridMeasure> = marginals
            .iter()
            .zip(&signs)
            .map(|(m, s)| if *s < 0.0 { m.reflected() } else { m.clone() })
            .collect();
        let cross = quantile_products(&flipped);
        let mut value = 0.0;
        for i in 0..n {
            value += qm.get(i, i) * second[i];
            for j in 0..n {
                if i != j {
                    value += qm.get(i, j) * signs[i] * signs[j] * cross[i][j];
                }
            }
        }
        return Ok(GridCoupling { value, exact: true, signs: Some(signs) });
    }
    let per = ((1e6_f64).powf(1.0 / n as f64).floor() as usize).clamp(2, 200);
    let coarse: Vec<DiscreteMeasure> = marginals.iter().map(|m| coarsen(m, per)).collect::<Result<_>>()?;
    let r = mmot_exact(&coarse, &CostSpec::Quadratic(q.clone()), Sense::Max)?;
    let mut value = r.value;
    for i in 0..n {
        let atoms: f64 = coarse[i].points().iter().zip(coarse[i].weights()).map(|(p, w)| w * p[0] * p[0]).sum();
        value += qm.get(i, i) * (second[i] - atoms);
    }
    Ok(GridCoupling { value, exact: false, signs: None })
}

/// `E[G_i(U) G_j(U)]` for the quantile functions `G_i`, exact for piecewise-linear `G`.
fn quantile_products(ms: &[GridMeasure]) -> Vec<Vec<f64>> {
    let n = ms.len();
    let pieces: Vec<Vec<Piece>> = ms.iter().map(quantile_pieces).collect();
    let mut breaks: Vec<f64> = pieces.iter().flat_map(|p| p.iter().map(|s| s.u1)).collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut cursor = vec![0usize; n];
    let mut out = vec![vec![0.0; n]; n];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1].min(1.0));
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let mut vals = vec![[0.0; 3]; n];
        for i in 0..n {
            let p = &pieces[i];
            while cursor[i] + 1 < p.len() && p[cursor[i]].u1 <= mid {
                cursor[i] += 1;
            }
            let s = &p[cursor[i]];
            vals[i] = [s.at(a), s.at(mid), s.at(b)];
        }
        for i in 0..n {
            for j in i + 1..n {
                let v = (b - a) / 6.0
                    * (vals[i][0] * vals[j][0] + 4.0 * vals[i][1] * vals[j][1] + vals[i][2] * vals[j][2]);
                out[i][j] += v;
                out[j][i] += v;
            }
        }
    }
    out
}

/// Groups consecutive cells into about `bins` equal-mass atoms at their means.
fn coarsen(m: &GridMeasure, bins: usize) -> Result<DiscreteMeasure> {
    let g = m.grid();
    let target = 1.0 / bins as f64;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let (mut mass, mut moment) = (0.0, 0.0);
    for (k, w) in m.masses().into_iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        mass += w;
        moment += w * g.axis_center(0, k);
        if mass >= target {
            points.push(DVector::from_element(1, moment / mass));
            weights.push(mass);
            mass = 0.0;
            moment = 0.0;
        }
    }
    if mass > 0.0 {
        points.push(DVector::from_element(1, moment / mass));
        weights.push(mass);
    }
    DiscreteMeasure::normalized(points, weights)
}
