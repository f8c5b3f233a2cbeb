//! Two-marginal distances and barycenters built on the exact solver.

use nalgebra::DVector;

use super::{mmot_exact, CostSpec, DiscreteMeasure, Sense};
use crate::error::{Error, Result};
use crate::linalg::check_simplex;

pub fn w2_squared_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::Dimension("measures live in different dimensions".into()));
    }
    let r = mmot_exact(&[mu.clone(), nu.clone()], &CostSpec::Pairwise(vec![1.0, 1.0]), Sense::Min)?;
    Ok(r.value.max(0.0))
}

pub fn w2_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(w2_squared_discrete(mu, nu)?.sqrt())
}

/// Pushforward of an optimal multimarginal plan under `x ↦ Σλ_i x_i`.
pub fn barycenter_discrete(lambda: &[f64], marginals: &[DiscreteMeasure]) -> Result<DiscreteMeasure> {
    check_simplex(lambda)?;
    let r = mmot_exact(marginals, &CostSpec::Pairwise(lambda.to_vec()), Sense::Min)?;
    let t = r.tensor().expect("exact solver returns a tensor");
    let mut atoms: Vec<(DVector<f64>, f64)> = Vec::new();
    for (k, &p) in t.probs().iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        let idx = t.index(k);
        let mut y = DVector::zeros(marginals[0].dim());
        for (i, m) in marginals.iter().enumerate() {
            y += &m.points()[idx[i]] * lambda[i];
        }
        match atoms.iter_mut().find(|(z, _)| (z - &y).norm() <= 1e-9) {
            Some((_, w)) => *w += p,
            None => atoms.push((y, p)),
        }
    }
    atoms.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (points, weights): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
    DiscreteMeasure::normalized(points, weights)
}
