//! Exact multimarginal transport on small discrete measures, and the
//! barycenter obtained by pushing the optimal plan through `x ↦ Σ λ_i x_i`.

use santalo_lab::couplings::{barycenter_discrete, mmot_exact, w2_squared_discrete, CostSpec, DiscreteMeasure, Sense};

fn main() -> santalo_lab::Result<()> {
    let lambda = [0.2, 0.3, 0.5];
    let ms = vec![
        DiscreteMeasure::from_1d(&[-1.0, 0.3, 2.0], &[0.3, 0.5, 0.2])?,
        DiscreteMeasure::uniform_1d(&[-2.0, 0.5, 1.0, 4.0])?,
        DiscreteMeasure::uniform_1d(&[0.0, 1.0])?,
    ];
    let plan = mmot_exact(&ms, &CostSpec::Pairwise(lambda.to_vec()), Sense::Min)?;
    println!("inf E Σ λ_iλ_j |X_i − X_j|² = {:.12}", plan.value);

    let bar = barycenter_discrete(&lambda, &ms)?;
    let mut cost = 0.0;
    for (m, l) in ms.iter().zip(lambda) {
        cost += l * w2_squared_discrete(m, &bar)?;
    }
    println!("Σ λ_i W2(μ_i, μ̄)²          = {cost:.12}");
    for (p, w) in bar.points().iter().zip(bar.weights()) {
        println!("  atom {:+.4}  weight {:.4}", p[0], w);
    }
    Ok(())
}
