//! Entropic multimarginal transport by cyclic log-domain scaling.

use super::{
    cell_costs, product_size, CostSpec, CouplingResult, CouplingTensor, DiscreteMeasure, GapKind,
    Optimizer, Sense, Status,
};
use crate::error::{Error, Result};

pub const SINKHORN_CELL_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    /// Largest tolerated absolute marginal error.
    pub tol: f64,
    pub max_rounds: usize,
}

impl SinkhornOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, tol: 1e-9, max_rounds: 50_000 }
    }
}

pub fn mmot_sinkhorn(
    marginals: &[DiscreteMeasure],
    cost: &CostSpec,
    sense: Sense,
    epsilon: f64,
) -> Result<CouplingResult> {
    mmot_sinkhorn_with(marginals, cost, sense, &SinkhornOptions::new(epsilon))
}

/// `value` is the unregularized cost under the returned coupling;
/// `regularized_value` adds (min) or subtracts (max) `ε·KL(P ‖ ⊗μ_i)`.
pub fn mmot_sinkhorn_with(
    marginals: &[DiscreteMeasure],
    cost: &CostSpec,
    sense: Sense,
    opts: &SinkhornOptions,
) -> Result<CouplingResult> {
    let eps = opts.epsilon;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Invalid(format!("epsilon must be positive, got {eps}")));
    }
    cost.validate(marginals)?;
    let cells = product_size(marginals);
    if cells > SINKHORN_CELL_LIMIT {
        return Err(Error::SizeGuard { cells, limit: SINKHORN_CELL_LIMIT });
    }
    let n = marginals.len();
    let shape: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let strides: Vec<usize> = (0..n).map(|i| shape[i + 1..].iter().product()).collect();
    let costs = cell_costs(marginals, cost);
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let log_a: Vec<Vec<f64>> = marginals
        .iter()
        .map(|m| m.weights().iter().map(|w| w.ln()).collect())
        .collect();

    // log P(x) = Σ_j g_j(x_j) − sign·C(x)/ε, started from the product measure.
    let mut log_p: Vec<f64> = costs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let base: f64 = (0..n).map(|i| log_a[i][(k / strides[i]) % shape[i]]).sum();
            base - sign * c / eps
        })
        .collect();

    let mut status = Status::MaxIter;
    let mut rounds = 0;
    for round in 1..=opts.max_rounds {
        rounds = round;
        for i in 0..n {
            let lse = group_lse(&log_p, shape[i], strides[i]);
            let delta: Vec<f64> = log_a[i]
                .iter()
                .zip(&lse)
                .map(|(a, l)| if a.is_finite() { a - l } else { f64::NEG_INFINITY })
                .collect();
            for (k, lp) in log_p.iter_mut().enumerate() {
                *lp += delta[(k / strides[i]) % shape[i]];
            }
        }
        let mut residual: f64 = 0.0;
        for i in 0..n - 1 {
            let lse = group_lse(&log_p, shape[i], strides[i]);
            for (l, m) in lse.iter().zip(marginals[i].weights()) {
                residual = residual.max((l.exp() - m).abs());
            }
        }
        if residual < opts.tol {
            status = Status::Converged;
            break;
        }
    }

    let probs: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
    let value: f64 = probs.iter().zip(&costs).map(|(p, c)| p * c).sum();
    let mut kl = 0.0;
    for (k, (&p, &lp)) in probs.iter().zip(&log_p).enumerate() {
        if p > 0.0 {
            let base: f64 = (0..n).map(|i| log_a[i][(k / strides[i]) % shape[i]]).sum();
            kl += p * (lp - base);
        }
    }
    let support: f64 = shape.iter().map(|&s| (s as f64).ln()).sum();
    Ok(CouplingResult {
        value,
        optimizer: Optimizer::Tensor(CouplingTensor::new(shape, probs)),
        iterations: rounds,
        gap: eps * support,
        gap_kind: GapKind::Heuristic,
        status,
        regularized_value: Some(value + sign * eps * kl),
    })
}

/// Log-sum-exp of `log_p` grouped by the index along one axis.
fn group_lse(log_p: &[f64], len: usize, stride: usize) -> Vec<f64> {
    let mut max = vec![f64::NEG_INFINITY; len];
    for (k, &l) in log_p.iter().enumerate() {
        let g = (k / stride) % len;
        if l > max[g] {
            max[g] = l;
        }
    }
    let mut sum = vec![0.0; len];
    for (k, &l) in log_p.iter().enumerate() {
        let g = (k / stride) % len;
        if max[g].is_finite() {
            sum[g] += (l - max[g]).exp();
        }
    }
    max.iter().zip(&sum).map(|(m, s)| if m.is_finite() { m + s.ln() } else { *m }).collect()
}
