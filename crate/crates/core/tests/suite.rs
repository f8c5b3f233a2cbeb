use nalgebra::DVector;
use proptest::prelude::*;
use santalo_lab::couplings::DiscreteMeasure;
use santalo_lab::gaussian::GaussianMeasure;
use santalo_lab::grid::{Grid, GridMeasure};
use santalo_lab::linalg::SymMatrix;
use santalo_lab::report::Verdict;
use santalo_lab::sharp_constant::{barycenter_form_constant, encode_barycenter_form};
use santalo_lab::suite::{
    displacement_convexity_check, entropy_inequality_check, equivalence_check, multimarginal_form_check,
    proof_chain_check, quadratic_identity_check, quadratic_identity_probe, symm_talagrand_check,
    talagrand_barycenter_check, Marginals,
};
use santalo_lab::Error;

fn n1(var: f64) -> GaussianMeasure {
    GaussianMeasure::scalar(0.0, var).unwrap()
}

fn gaussians(vars: &[f64]) -> Marginals {
    Marginals::Gaussian(vars.iter().map(|&v| n1(v)).collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn talagrand_barycenter_values() {
    let r = talagrand_barycenter_check(&gaussians(&[2.0, 0.5]), &[0.5, 0.5], None).unwrap();
    assert!(close(r.lhs, 0.125, 1e-8) && close(r.rhs, 0.125, 1e-8));
    assert_eq!(r.verdict, Verdict::Saturated);
    let id = Marginals::Gaussian(vec![GaussianMeasure::standard(2); 3]);
    let r = talagrand_barycenter_check(&id, &[0.2, 0.3, 0.5], None).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
    let third = [1.0 / 3.0; 3];
    let r = talagrand_barycenter_check(&gaussians(&[2.0, 1.0, 0.5]), &third, None).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn multimarginal_values() {
    let r = multimarginal_form_check(&gaussians(&[2.0, 0.5]), &[0.5, 0.5], None).unwrap();
    assert!(close(r.lhs, 0.0625, 1e-8) && close(r.rhs, 0.0625, 1e-8));
    let r = multimarginal_form_check(&gaussians(&[1.0; 4]), &[0.1, 0.2, 0.3, 0.4], None).unwrap();
    assert_eq!(r.verdict, Verdict::Saturated);
    let signs = DiscreteMeasure::uniform_1d(&[-1.0, 1.0]).unwrap();
    let r = multimarginal_form_check(&Marginals::Discrete(vec![signs.clone(), signs]), &[0.5, 0.5], None).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs > 0.0 && r.deficit >= 0.0);
    assert_eq!(r.meta["relative_entropy"], "smoothed");
}

#[test]
fn equivalence_values() {
    let r = equivalence_check(&gaussians(&[2.0, 0.5]), &[0.5, 0.5], None).unwrap();
    assert!(close(r.lhs, 0.125, 1e-8) && close(r.rhs, 0.125, 1e-8));
    let pts = Marginals::Discrete(vec![
        DiscreteMeasure::from_1d(&[0.0], &[1.0]).unwrap(),
        DiscreteMeasure::from_1d(&[2.0], &[1.0]).unwrap(),
    ]);
    let r = equivalence_check(&pts, &[0.5, 0.5], None).unwrap();
    assert!(close(r.lhs, 1.0, 1e-12) && close(r.rhs, 1.0, 1e-12));
    let signs = DiscreteMeasure::uniform_1d(&[-1.0, 1.0]).unwrap();
    let r = equivalence_check(&Marginals::Discrete(vec![signs.clone(), signs]), &[0.5, 0.5], None).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
    assert!(r.meta["pushforward_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn symmetrized_values() {
    let r = symm_talagrand_check(&gaussians(&[2.0, 0.5]), None).unwrap();
    assert!(close(r.lhs, 0.25, 1e-8) && close(r.rhs, 0.25, 1e-8));
    assert_eq!(r.meta["equality_case"], true);
    let r = symm_talagrand_check(&gaussians(&[1.0, 1.0]), None).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
    let r = symm_talagrand_check(&gaussians(&[2.0, 2.0]), None).unwrap();
    assert!(r.lhs.abs() < 1e-12 && close(r.rhs, 2.0 * 0.153_426_4, 1e-7));
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(symm_talagrand_check(&gaussians(&[1.0, 1.0, 1.0]), None).is_err());
}

#[test]
fn displacement_values() {
    let r = displacement_convexity_check(&gaussians(&[2.0, 0.5]), &[0.5, 0.5], None).unwrap();
    assert!(close(r.lhs, 0.125, 1e-7) && close(r.rhs, 0.066_108_5, 1e-7));
    assert_eq!(r.verdict, Verdict::Holds);
    let r = displacement_convexity_check(&gaussians(&[1.0; 3]), &[0.2, 0.3, 0.5], None).unwrap();
    assert_eq!(r.verdict, Verdict::Saturated);
    let r = displacement_convexity_check(&gaussians(&[2.0, 1.0, 0.5]), &[1.0 / 3.0; 3], None).unwrap();
    assert!(r.deficit > 1e-4);
}

#[test]
fn quadratic_identity_values() {
    assert!(quadratic_identity_check(&[0.3, 0.7], &[vec![1.0, -2.0], vec![0.5, 4.0]]).unwrap() < 1e-15);
    assert!(quadratic_identity_probe(3, 2, 1000, 1).unwrap() < 1e-12);
    assert!(quadratic_identity_probe(5, 3, 1000, 2).unwrap() < 1e-11);
    assert!(quadratic_identity_check(&[1.0], &[vec![1.0]]).is_err());
}

#[test]
fn entropy_inequality_values() {
    let lambda = [0.5, 0.5];
    let p = encode_barycenter_form(&lambda, 1).unwrap();
    let dg = barycenter_form_constant(&lambda, 1).unwrap();
    for pair in [[1.0, 1.0], [2.0, 0.5]] {
        let r = entropy_inequality_check(&gaussians(&pair), p.c(), p.q(), dg, None, None).unwrap();
        assert!(r.deficit.abs() < 2e-3, "{pair:?}: {}", r.deficit);
    }
    let s = 3f64.sqrt();
    let u = GridMeasure::uniform_1d(Grid::line(-4.0 * s, 4.0 * s, 1024).unwrap(), -s, s).unwrap();
    let r = entropy_inequality_check(&Marginals::Grid(vec![u.clone(), u]), p.c(), p.q(), dg, None, None).unwrap();
    assert!(r.deficit > 2e-2);
    let moved = Marginals::Gaussian(vec![n1(2.0), GaussianMeasure::scalar(1.0, 0.5).unwrap()]);
    assert!(entropy_inequality_check(&moved, p.c(), p.q(), dg, Some(&[0.0, 0.0]), None).is_err());
}

#[test]
fn centering_policy() {
    let nearly = Marginals::Gaussian(vec![GaussianMeasure::scalar(1e-7, 2.0).unwrap(), n1(0.5)]);
    let r = talagrand_barycenter_check(&nearly, &[0.5, 0.5], None).unwrap();
    assert_eq!(r.meta["recentered"], true);
    assert_eq!(r.verdict, Verdict::Saturated);
    let far = Marginals::Gaussian(vec![GaussianMeasure::scalar(1e-3, 2.0).unwrap(), n1(0.5)]);
    assert!(matches!(talagrand_barycenter_check(&far, &[0.5, 0.5], None), Err(Error::HypothesisViolated(_))));
    assert!(matches!(talagrand_barycenter_check(&gaussians(&[1.0, 1.0]), &[0.5, 0.6], None), Err(Error::Simplex(_))));
}

#[test]
fn scale_family_sweep() {
    for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = symm_talagrand_check(&gaussians(&[c, 1.0 / c]), None).unwrap();
        assert!(r.deficit.abs() <= 1e-8, "{c}");
        let r = symm_talagrand_check(&gaussians(&[c, c]), None).unwrap();
        if c == 1.0 {
            assert!(r.deficit.abs() <= 1e-8);
        } else {
            assert!(r.deficit > 1e-3, "{c}");
        }
    }
}

#[test]
fn equality_propagation() {
    let lambda = [0.1, 0.2, 0.3, 0.4];
    let m = Marginals::Gaussian(vec![GaussianMeasure::standard(2); 4]);
    let reports = [
        talagrand_barycenter_check(&m, &lambda, None).unwrap(),
        multimarginal_form_check(&m, &lambda, None).unwrap(),
        equivalence_check(&m, &lambda, None).unwrap(),
        displacement_convexity_check(&m, &lambda, None).unwrap(),
        proof_chain_check(&[GaussianMeasure::standard(2), GaussianMeasure::standard(2), GaussianMeasure::standard(2)], &[0.2, 0.3, 0.5], None).unwrap(),
        symm_talagrand_check(&Marginals::Gaussian(vec![GaussianMeasure::standard(2); 2]), None).unwrap(),
    ];
    for r in reports {
        assert_eq!(r.verdict, Verdict::Saturated, "{}", r.name);
        assert!(r.deficit.abs() <= 1e-10, "{}", r.name);
    }
}

#[test]
fn strictness_for_three_marginals() {
    let r = multimarginal_form_check(&gaussians(&[1.2, 1.0, 1.0]), &[1.0 / 3.0; 3], None).unwrap();
    assert!(r.deficit >= 1e-4, "{}", r.deficit);
}

fn cov2() -> impl Strategy<Value = SymMatrix> {
    (0.3f64..3.0, 0.3f64..3.0, -0.9f64..0.9).prop_map(|(a, b, r)| {
        let off = r * (a * b).sqrt();
        SymMatrix::from_row_slice(2, &[a, off, off, b]).unwrap()
    })
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

fn small_discrete() -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..=5).prop_flat_map(|k| {
        (prop::collection::vec(-2.0f64..2.0, k), prop::collection::vec(0.1f64..1.0, k)).prop_map(|(x, w)| {
            let s: f64 = w.iter().sum();
            let mean: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / s;
            let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
            DiscreteMeasure::normalized(centered.into_iter().map(|v| DVector::from_vec(vec![v])).collect(), w).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_checks_hold((lambda, covs) in (2usize..5).prop_flat_map(|n| (simplex(n), prop::collection::vec(cov2(), n)))) {
        let m = Marginals::Gaussian(covs.iter().map(|k| GaussianMeasure::centered(k.clone()).unwrap()).collect());
        for r in [
            talagrand_barycenter_check(&m, &lambda, None).unwrap(),
            multimarginal_form_check(&m, &lambda, None).unwrap(),
            displacement_convexity_check(&m, &lambda, None).unwrap(),
        ] {
            prop_assert!(!r.is_violated(), "{}: {}", r.name, r.deficit);
        }
        let e = equivalence_check(&m, &lambda, None).unwrap();
        prop_assert!((e.lhs - e.rhs).abs() <= 1e-8);
    }

    #[test]
    fn proof_chain_steps_nonnegative((lambda, covs) in (3usize..6).prop_flat_map(|n| (simplex(n), prop::collection::vec(cov2(), n)))) {
        let gs: Vec<_> = covs.into_iter().map(|k| GaussianMeasure::centered(k).unwrap()).collect();
        let r = proof_chain_check(&gs, &lambda, None).unwrap();
        prop_assert!(r.meta["min_step_slack"].as_f64().unwrap() >= -1e-8);
        prop_assert!(r.meta["telescoping_residual"].as_f64().unwrap() <= 1e-10);
        prop_assert!(r.deficit >= -1e-8);
    }

    #[test]
    fn discrete_equivalence(ms in prop::collection::vec(small_discrete(), 2..=3), w in simplex(3)) {
        let lambda: Vec<f64> = {
            let w = &w[..ms.len()];
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        let r = equivalence_check(&Marginals::Discrete(ms), &lambda, None).unwrap();
        prop_assert!((r.lhs - r.rhs).abs() <= 1e-9, "{} vs {}", r.lhs, r.rhs);
    }

    #[test]
    fn quadratic_identity_random(n1 in 2usize..=6, d in 1usize..=3, seed in 0u64..1000) {
        prop_assert!(quadratic_identity_probe(n1, d, 200, seed).unwrap() <= 1e-11);
    }

    #[test]
    fn entropy_side_translation_invariant(k in prop::collection::vec(0.3f64..3.0, 2), v in prop::collection::vec(-3.0f64..3.0, 2)) {
        let lambda = [0.4, 0.6];
        let p = encode_barycenter_form(&lambda, 1).unwrap();
        let dg = barycenter_form_constant(&lambda, 1).unwrap();
        let centered = Marginals::Gaussian(k.iter().map(|&x| n1(x)).collect());
        let moved = Marginals::Gaussian(k.iter().zip(&v).map(|(&x, &m)| GaussianMeasure::scalar(m, x).unwrap()).collect());
        let a = entropy_inequality_check(&centered, p.c(), p.q(), dg, None, None).unwrap();
        let b = entropy_inequality_check(&moved, p.c(), p.q(), dg, Some(&v), None).unwrap();
        prop_assert!((a.deficit - b.deficit).abs() <= 1e-6);
        prop_assert!(a.deficit >= -1e-6);
    }
}
