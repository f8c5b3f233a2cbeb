use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use santalo_lab::couplings::QuadraticForm;
use santalo_lab::grid::{Grid, GridMeasure};
use santalo_lab::linalg::{BlockStructure, SymMatrix};
use santalo_lab::sharp_constant::{
    barycenter_form_constant, block_feasibility, dg_compute, dg_delta_limit, empirical_d_scan, encode_barycenter_form,
    test_family, DgOptions, DgStatus, EntropyProblem, FamilyMember,
};
use santalo_lab::Error;

fn form(rows: &[Vec<f64>], dims: Vec<usize>) -> QuadraticForm {
    QuadraticForm::new(SymMatrix::from_rows(rows).unwrap(), BlockStructure::new(dims).unwrap()).unwrap()
}

fn bad_form() -> QuadraticForm {
    form(&[vec![-1.0, 0.3], vec![0.3, 0.0]], vec![1, 1])
}

#[test]
fn block_screen() {
    assert!(!block_feasibility(&bad_form()));
    assert!(block_feasibility(&QuadraticForm::zero(BlockStructure::uniform(3, 2).unwrap())));
    assert!(block_feasibility(encode_barycenter_form(&[0.2, 0.3, 0.5], 2).unwrap().q()));
}

fn pairwise(lambda: &[f64], xs: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            s += lambda[i] * lambda[j] * xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    s
}

#[test]
fn barycenter_form_probe_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (lambda, d) in [(vec![0.5, 0.5], 1), (vec![1.0 / 3.0; 3], 1), (vec![0.1, 0.2, 0.3, 0.4], 3)] {
        let p = encode_barycenter_form(&lambda, d).unwrap();
        for (c, l) in p.c().iter().zip(&lambda) {
            assert!((c - l * (1.0 - l)).abs() < 1e-15);
        }
        for _ in 0..100 {
            let xs: Vec<Vec<f64>> = (0..lambda.len()).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
            let flat: Vec<f64> = xs.concat();
            assert!((p.q().eval(&flat) - pairwise(&lambda, &xs)).abs() < 1e-12);
        }
    }
    let p = encode_barycenter_form(&[0.5, 0.5], 1).unwrap();
    assert!((p.q().eval(&[1.0, 1.0]) - 0.25).abs() < 1e-15);
}

#[test]
fn degenerate_single_marginal() {
    assert!(matches!(encode_barycenter_form(&[1.0], 1), Err(Error::Invalid(_))));
    assert!(matches!(encode_barycenter_form(&[0.7, 0.7], 1), Err(Error::Simplex(_))));
}

#[test]
fn dg_barycenter_forms() {
    for (lambda, want) in [(vec![0.5, 0.5], 0.459_469_2), (vec![1.0 / 3.0; 3], 0.612_625_7)] {
        let p = encode_barycenter_form(&lambda, 1).unwrap().with_delta(1e-6).unwrap();
        let r = dg_compute(&p, &DgOptions::default()).unwrap();
        assert!((r.value - want).abs() < 1e-3, "{} vs {want}", r.value);
        assert!(r.value <= barycenter_form_constant(&lambda, 1).unwrap() + 1e-9);
        assert_eq!(r.starts.len(), 20);
        assert_eq!(r.covariances.len(), lambda.len());
    }
}

#[test]
fn dg_infeasible_blocks() {
    let p = EntropyProblem::new(vec![1.0, 1.0], bad_form(), 0.0).unwrap();
    let r = dg_compute(&p, &DgOptions::default()).unwrap();
    assert_eq!(r.value, f64::INFINITY);
    assert_eq!(r.status, DgStatus::InfeasibleBlocks);
    let l = dg_delta_limit(&p, &[0.1, 0.01], &DgOptions::default()).unwrap();
    assert!(l.values.iter().all(|v| *v == f64::INFINITY));
}

#[test]
fn dg_one_marginal_closed_form() {
    let q = QuadraticForm::zero(BlockStructure::uniform(1, 1).unwrap());
    let p = EntropyProblem::new(vec![1.0], q, 0.1).unwrap();
    let r = dg_compute(&p, &DgOptions::default()).unwrap();
    // Maximizer k = c/(2δ) = 5.
    let want = 0.5 * (2.0 * PI * E * 5.0).ln() - 0.5;
    assert!((r.value - want).abs() < 1e-6, "{} vs {want}", r.value);
    assert!((r.covariances[0].get(0, 0) - 5.0).abs() < 1e-3);
}

#[test]
fn delta_schedule() {
    let p = encode_barycenter_form(&[0.5, 0.5], 1).unwrap();
    let l = dg_delta_limit(&p, &[0.1, 0.01, 0.001], &DgOptions::default()).unwrap();
    assert!(l.monotone);
    assert!(l.values.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!(l.values[2] <= 0.459_469_3 && l.values[2] > 0.45);
    assert!(dg_delta_limit(&p, &[], &DgOptions::default()).is_err());
    assert!(dg_delta_limit(&p, &[0.01, 0.1], &DgOptions::default()).is_err());
    assert!(dg_delta_limit(&p, &[1e-9], &DgOptions::default()).is_err());
}

fn gaussian_member(vars: &[f64]) -> FamilyMember {
    let marginals = vars
        .iter()
        .map(|&v| GridMeasure::gaussian_1d(Grid::line(-12.0 * v.sqrt(), 12.0 * v.sqrt(), 1024).unwrap(), 0.0, v).unwrap())
        .collect();
    FamilyMember { label: format!("gaussian{vars:?}"), marginals }
}

fn uniform_member(half: &[f64]) -> FamilyMember {
    let marginals = half
        .iter()
        .map(|&a| GridMeasure::uniform_1d(Grid::line(-4.0 * a, 4.0 * a, 1024).unwrap(), -a, a).unwrap())
        .collect();
    FamilyMember { label: "uniform".into(), marginals }
}

#[test]
fn scan_gaussians_and_uniforms() {
    let lambda = [0.3, 0.7];
    let p = encode_barycenter_form(&lambda, 1).unwrap();
    let dg = barycenter_form_constant(&lambda, 1).unwrap();
    // The saturating pair has K_2 = K_1^{-1}.
    let family = vec![gaussian_member(&[1.0, 1.0]), gaussian_member(&[2.0, 0.5]), uniform_member(&[1.0, 1.0]), uniform_member(&[0.5, 2.0])];
    let r = empirical_d_scan(&p, &family, dg, 2e-2).unwrap();
    assert!(r.members[0].deficit.abs() < 1e-2 && r.members[1].deficit.abs() < 1e-2);
    assert!(r.members[2].deficit > 1e-2 && r.members[3].deficit > 1e-2);
    assert_eq!(r.failures, 0);
    assert!(empirical_d_scan(&p, &[gaussian_member(&[1.0])], dg, 2e-2).is_err());
}

#[test]
fn family_is_seeded() {
    let a = test_family(2, 5, 256, 9).unwrap();
    let b = test_family(2, 5, 256, 9).unwrap();
    assert_eq!(a.iter().map(|m| &m.label).collect::<Vec<_>>(), b.iter().map(|m| &m.label).collect::<Vec<_>>());
    assert!(a.iter().all(|m| m.marginals.len() == 2 && m.marginals.iter().all(|g| g.mean()[0].abs() < 1e-9)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dg_invariant_under_block_rotation(seed in 0u64..1000, l in 0.15f64..0.85) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = encode_barycenter_form(&[l, 1.0 - l], 2).unwrap();
        let mut r = DMatrix::zeros(4, 4);
        for i in 0..2 {
            let o = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
            r.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&o);
        }
        let q = QuadraticForm::new(p.q().matrix().congruence(&r).unwrap(), p.q().blocks().clone()).unwrap();
        let rotated = EntropyProblem::new(p.c().to_vec(), q, 0.0).unwrap();
        let a = dg_compute(&p, &DgOptions::default()).unwrap().value;
        let b = dg_compute(&rotated, &DgOptions::default()).unwrap().value;
        prop_assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}
