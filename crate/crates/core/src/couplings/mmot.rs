//! Exact multimarginal transport as a linear program over the full product grid.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use super::{
    cell_costs, product_size, CostSpec, CouplingResult, CouplingTensor, DiscreteMeasure, GapKind,
    Optimizer, Sense, Status,
};
use crate::error::{Error, Result};

pub const MMOT_CELL_LIMIT: u128 = 1_000_000;

pub fn mmot_exact(marginals: &[DiscreteMeasure], cost: &CostSpec, sense: Sense) -> Result<CouplingResult> {
    cost.validate(marginals)?;
    let cells = product_size(marginals);
    if cells > MMOT_CELL_LIMIT {
        return Err(Error::SizeGuard { cells, limit: MMOT_CELL_LIMIT });
    }
    let shape: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let costs = cell_costs(marginals, cost);
    let n_cells = costs.len();

    if marginals.len() == 1 {
        let probs = marginals[0].weights().to_vec();
        let value = probs.iter().zip(&costs).map(|(p, c)| p * c).sum();
        return Ok(exact_result(value, CouplingTensor::new(shape, probs), 0));
    }

    let dir = match sense {
        Sense::Min => OptimizationDirection::Minimize,
        Sense::Max => OptimizationDirection::Maximize,
    };
    let mut lp = Problem::new(dir);
    let vars: Vec<_> = costs.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();

    // One equality per atom of every marginal. The system is rank deficient by
    // n − 1; the solver copes with the redundancy.
    for (i, m) in marginals.iter().enumerate() {
        let stride: usize = shape[i + 1..].iter().product();
        let mut exprs: Vec<LinearExpr> = (0..m.len()).map(|_| LinearExpr::empty()).collect();
        for (k, var) in vars.iter().enumerate() {
            exprs[(k / stride) % shape[i]].add(*var, 1.0);
        }
        for (expr, &w) in exprs.into_iter().zip(m.weights()) {
            lp.add_constraint(expr, ComparisonOp::Eq, w);
        }
    }

    let solution = lp
        .solve()
        .map_err(|e| Error::Solver(format!("linear program: {e}")))?
        .into_solution()
        .map_err(|e| Error::Solver(format!("linear program interrupted: {e:?}")))?;
    let probs: Vec<f64> = vars.iter().map(|v| solution[*v].max(0.0)).collect();
    let value = probs.iter().zip(&costs).map(|(p, c)| p * c).sum();
    let tensor = CouplingTensor::new(shape, probs);
    let residual = tensor.marginal_residual(marginals);
    if residual > 1e-9 {
        return Err(Error::Solver(format!("marginal residual {residual:e} after LP solve")));
    }
    Ok(exact_result(value, tensor, n_cells))
}

fn exact_result(value: f64, tensor: CouplingTensor, iterations: usize) -> CouplingResult {
    CouplingResult {
        value,
        optimizer: Optimizer::Tensor(tensor),
        iterations,
        gap: 0.0,
        gap_kind: GapKind::Exact,
        status: Status::Converged,
        regularized_value: None,
    }
}
