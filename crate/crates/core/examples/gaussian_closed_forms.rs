//! Entropies, relative entropies, W2 distances and the barycenter of two
//! centered Gaussians in closed form.

use santalo_lab::gaussian::{barycenter_gaussian, w2_squared_gaussian, GaussianMeasure};
use santalo_lab::linalg::SymMatrix;

fn main() -> santalo_lab::Result<()> {
    let a = GaussianMeasure::scalar(0.0, 2.0)?;
    let b = GaussianMeasure::scalar(0.0, 0.5)?;
    println!("h(N(0,2))        = {:.10}", a.entropy()?);
    println!("D(N(0,2) | γ)    = {:.10}", a.relative_entropy());
    println!("D(N(0,1/2) | γ)  = {:.10}", b.relative_entropy());
    println!("W2²              = {:.10}", w2_squared_gaussian(&a, &b)?);

    let bar = barycenter_gaussian(&[0.5, 0.5], &[a.clone(), b.clone()])?;
    println!("barycenter var   = {:.10}", bar.cov().get(0, 0));
    let cost = 0.5 * w2_squared_gaussian(&a, &bar)? + 0.5 * w2_squared_gaussian(&b, &bar)?;
    println!("barycenter cost  = {cost:.10}");

    // A two-dimensional pair with non-commuting covariances.
    let k1 = SymMatrix::from_rows(&[vec![2.0, 0.6], vec![0.6, 1.0]])?;
    let k2 = SymMatrix::from_rows(&[vec![0.5, -0.2], vec![-0.2, 1.5]])?;
    let g1 = GaussianMeasure::centered(k1)?;
    let g2 = GaussianMeasure::centered(k2)?;
    let bar = barycenter_gaussian(&[0.3, 0.7], &[g1.clone(), g2.clone()])?;
    println!("2D barycenter    = {:?}", bar.cov().as_matrix().as_slice());
    println!("W2(g1, g2)       = {:.10}", w2_squared_gaussian(&g1, &g2)?.sqrt());
    Ok(())
}
