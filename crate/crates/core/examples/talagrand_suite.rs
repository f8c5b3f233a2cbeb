//! Transport-entropy checkers around Wasserstein barycenters on Gaussian and
//! discrete inputs, plus the step-by-step inductive chain.

use santalo_lab::couplings::DiscreteMeasure;
use santalo_lab::gaussian::GaussianMeasure;
use santalo_lab::report::InequalityReport;
use santalo_lab::suite::*;

fn show(r: &InequalityReport) {
    println!("{:24} lhs {:.10} rhs {:.10} deficit {:+.3e} {:?}", r.name, r.lhs, r.rhs, r.deficit, r.verdict);
}

fn main() -> santalo_lab::Result<()> {
    let pair = Marginals::Gaussian(vec![GaussianMeasure::scalar(0.0, 2.0)?, GaussianMeasure::scalar(0.0, 0.5)?]);
    let half = [0.5, 0.5];
    show(&talagrand_barycenter_check(&pair, &half, None)?);
    show(&multimarginal_form_check(&pair, &half, None)?);
    show(&symm_talagrand_check(&pair, None)?);
    show(&equivalence_check(&pair, &half, None)?);
    show(&displacement_convexity_check(&pair, &half, None)?);

    let third = [1.0 / 3.0; 3];
    let gs: Vec<GaussianMeasure> =
        [2.0, 1.0, 0.5].iter().map(|v| GaussianMeasure::scalar(0.0, *v)).collect::<santalo_lab::Result<_>>()?;
    show(&talagrand_barycenter_check(&Marginals::Gaussian(gs.clone()), &third, None)?);
    let chain = proof_chain_check(&gs, &third, None)?;
    show(&chain);
    println!("  step slacks {}", chain.meta["steps"]);

    let discrete = Marginals::Discrete(vec![
        DiscreteMeasure::uniform_1d(&[-1.0, 0.5, 0.5001])?,
        DiscreteMeasure::from_1d(&[-0.4, 0.2, 0.8], &[0.25, 0.5, 0.25])?,
    ]);
    show(&equivalence_check(&discrete, &[0.4, 0.6], Some(1e-9))?);
    println!("quadratic identity residual {:.2e}", quadratic_identity_probe(5, 3, 1000, 1)?);
    Ok(())
}
