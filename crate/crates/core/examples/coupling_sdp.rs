//! Best coupling of centered Gaussians for a quadratic form: the default block
//! ascent with its dual certificate against projected gradient.

use santalo_lab::couplings::{max_coupling_gaussian_with, min_coupling_gaussian, QuadraticForm, SdpMethod, SdpOptions};
use santalo_lab::linalg::{BlockStructure, SymMatrix};

fn main() -> santalo_lab::Result<()> {
    // Three blocks of dimensions 2, 1, 2.
    let bs = BlockStructure::new(vec![2, 1, 2])?;
    let q = SymMatrix::from_rows(&[
        vec![0.0, 0.0, 0.4, 0.3, -0.1],
        vec![0.0, 0.0, -0.2, 0.1, 0.5],
        vec![0.4, -0.2, 0.0, 0.6, 0.2],
        vec![0.3, 0.1, 0.6, 0.0, 0.0],
        vec![-0.1, 0.5, 0.2, 0.0, 0.0],
    ])?;
    let q = QuadraticForm::new(q, bs)?;
    let covs = vec![
        SymMatrix::from_rows(&[vec![1.5, 0.3], vec![0.3, 0.8]])?,
        SymMatrix::scalar(2.0)?,
        SymMatrix::from_diagonal(&[1.0, 3.0])?,
    ];
    for method in [SdpMethod::BlockAscent, SdpMethod::ProjectedGradient] {
        let r = max_coupling_gaussian_with(&q, &covs, &SdpOptions { method, ..SdpOptions::default() })?;
        println!(
            "{method:?}: sup = {:.12}, gap = {:.2e} ({:?}), iterations = {}",
            r.value, r.gap, r.gap_kind, r.iterations
        );
    }
    let r = min_coupling_gaussian(&q, &covs)?;
    println!("inf = {:.12}", r.value);
    Ok(())
}
