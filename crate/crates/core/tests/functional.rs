use std::f64::consts::PI;

use proptest::prelude::*;
use santalo_lab::couplings::QuadraticForm;
use santalo_lab::functional::{
    body_volume_via_layercake, bs_inequality_check, duality_transfer, feasibility_check, fn_barycenter,
    geometry_check, minkowski, q_functional, random_feasible_potentials, unit_ball_volume, BsOptions, ConvexBody,
    GridFunction, Potential, ProbeSpec,
};
use santalo_lab::grid::Grid;
use santalo_lab::linalg::{BlockStructure, SymMatrix};
use santalo_lab::report::Verdict;
use santalo_lab::sharp_constant::{barycenter_form_constant, encode_barycenter_form};
use santalo_lab::Error;

fn line() -> Grid {
    Grid::line(-12.0, 12.0, 480).unwrap()
}

fn quad(a: f64, v: f64, shift: f64) -> Potential {
    Potential::new(line(), move |x: &[f64]| Some(0.5 * a * (x[0] - v).powi(2) + shift))
}

fn half() -> (Vec<f64>, QuadraticForm, f64) {
    let p = encode_barycenter_form(&[0.5, 0.5], 1).unwrap();
    (p.c().to_vec(), p.q().clone(), barycenter_form_constant(&[0.5, 0.5], 1).unwrap())
}

#[test]
fn barycenter_of_potentials() {
    let even = quad(1.0, 0.0, 0.0).sample().unwrap();
    assert!(fn_barycenter(&even).unwrap()[0].abs() < 1e-10);
    let grid = Grid::line(-12.0, 14.0, 2600).unwrap();
    let moved = GridFunction::from_fn(grid, |x| Some(0.5 * (x[0] - 1.0).powi(2))).unwrap();
    assert!((fn_barycenter(&moved).unwrap()[0] - 1.0).abs() < 1e-6);
    let grid = Grid::line(-2.0, 2.0, 40).unwrap();
    let h = grid.spacing(0);
    let mut values = vec![None; 40];
    values[5] = Some(0.7);
    values[34] = Some(0.7);
    let two = GridFunction::new(grid, values).unwrap();
    assert!(fn_barycenter(&two).unwrap()[0].abs() <= h);
    assert!(matches!(GridFunction::new(line(), vec![None; 480]), Err(Error::ZeroMass)));
}

#[test]
fn q_functional_values() {
    let (_, q, _) = half();
    let even = [quad(1.0, 0.0, 0.0).sample().unwrap(), quad(3.0, 0.0, 1.0).sample().unwrap()];
    assert!(q_functional(&even, &q).unwrap().abs() < 1e-9);
    let grid = Grid::line(-11.0, 13.0, 480).unwrap();
    let one = GridFunction::from_fn(grid, |x| Some(0.5 * (x[0] - 1.0).powi(2))).unwrap();
    // λ₁λ₂·1·1 with λ = (½, ½).
    assert!((q_functional(&[one.clone(), one.clone()], &q).unwrap() - 0.25).abs() < 1e-6);
    let zero = QuadraticForm::zero(BlockStructure::uniform(2, 1).unwrap());
    assert_eq!(q_functional(&[one.clone(), one], &zero).unwrap(), 0.0);
}

#[test]
fn bs_saturators() {
    let (c, q, dg) = half();
    let r = bs_inequality_check(&[quad(1.0, 0.0, 0.0), quad(1.0, 0.0, 0.0)], &c, &q, dg, &BsOptions::default()).unwrap();
    assert!((r.lhs - (2.0 * PI).powf(0.25)).abs() < 1e-6 && (r.rhs - (2.0 * PI).powf(0.25)).abs() < 1e-12);
    assert!(r.deficit.abs() < 1e-6);
    assert_eq!(r.verdict, Verdict::Saturated);
    let r = bs_inequality_check(&[quad(1.0, 0.0, 0.1), quad(1.0, 0.0, 0.1)], &c, &q, dg, &BsOptions::default()).unwrap();
    assert!((r.deficit - 0.05).abs() < 1e-6);
}

#[test]
fn bs_translations() {
    let (c, q, dg) = half();
    for v in [0.5, 1.0, 2.0] {
        let r = bs_inequality_check(&[quad(1.0, v, 0.0), quad(1.0, -v, 0.0)], &c, &q, dg, &BsOptions::default()).unwrap();
        assert!((r.deficit - v * v / 4.0).abs() < 1e-6, "{v}: {}", r.deficit);
    }
    let same = [quad(1.0, 1.0, 0.0), quad(1.0, 1.0, 0.0)];
    assert!(matches!(
        bs_inequality_check(&same, &c, &q, dg, &BsOptions::default()),
        Err(Error::HypothesisViolated(_))
    ));
}

#[test]
fn feasibility_probes() {
    let (c, q, _) = half();
    let fs = [quad(1.0, 0.0, 0.0).sample().unwrap(), quad(1.0, 0.0, 0.0).sample().unwrap()];
    let f = feasibility_check(&fs, &c, &q, ProbeSpec::default()).unwrap();
    assert!(f.exhaustive && f.probes == 480 * 480);
    assert!(f.min_margin >= 0.0 && f.min_margin < 1e-3);
    let s = feasibility_check(&fs, &c, &q, ProbeSpec::Sampled { count: 5000, seed: 1 }).unwrap();
    assert!(!s.exhaustive && s.min_margin >= f.min_margin);
}

#[test]
fn duality_saturators_and_boxes() {
    let (c, q, dg) = half();
    let r = duality_transfer(&[quad(1.0, 0.0, 0.0), quad(1.0, 0.0, 0.0)], &c, &q, dg, 2e-2).unwrap();
    assert!(r.deficit.abs() < 2e-2, "{}", r.deficit);

    let one = QuadraticForm::zero(BlockStructure::uniform(1, 1).unwrap());
    let d = 0.5 * (2.0 * PI).ln();
    let b = Potential::new(Grid::line(-2.0, 2.0, 400).unwrap(), |x: &[f64]| (x[0].abs() <= 1.0).then_some(0.0));
    let r = duality_transfer(&[b], &[1.0], &one, d, 2e-2).unwrap();
    assert!(r.deficit > 0.2, "{}", r.deficit);

    // Only the variational identity is exact here; h(N(0,1)) exceeds this constant.
    let r = duality_transfer(&[quad(1.0, 0.0, 0.0)], &[1.0], &one, d, 2e-2).unwrap();
    assert!(r.meta["gibbs_identity_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn minkowski_values() {
    let ball = ConvexBody::ball(1.0, 2).unwrap();
    assert!((minkowski(&ball, &[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(minkowski(&ball, &[0.0, 0.0]).unwrap(), 0.0);
    let seg = ConvexBody::polytope(vec![vec![1.0], vec![-1.0]]).unwrap();
    assert!((minkowski(&seg, &[3.0]).unwrap() - 3.0).abs() < 1e-12);
    assert!(minkowski(&ball, &[1.0]).is_err());
    assert!(ConvexBody::polytope(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).is_err());
}

#[test]
fn layercake_volumes() {
    assert!((body_volume_via_layercake(&ConvexBody::ball(1.0, 2).unwrap()).unwrap() - PI).abs() < 1e-3);
    assert!((body_volume_via_layercake(&ConvexBody::symmetric_interval(1.0).unwrap()).unwrap() - 2.0).abs() < 1e-3);
    let e = ConvexBody::ellipsoid(SymMatrix::from_diagonal(&[4.0, 1.0]).unwrap()).unwrap();
    assert!((body_volume_via_layercake(&e).unwrap() - 2.0 * PI).abs() < 2e-3);
    assert!((e.volume().unwrap() - 2.0 * PI).abs() < 1e-12);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
}

#[test]
fn geometry_cases() {
    let balls = vec![ConvexBody::ball(1.0, 2).unwrap(); 3];
    let r = geometry_check(&balls, &[0.2, 0.3, 0.5], 1e-3).unwrap();
    assert!(r.deficit.abs() <= 1e-3);
    let polar = [ConvexBody::symmetric_interval(2.0).unwrap(), ConvexBody::symmetric_interval(0.5).unwrap()];
    let r = geometry_check(&polar, &[0.5, 0.5], 1e-3).unwrap();
    assert!(r.deficit.abs() <= 1e-3);
    let shrunk = [polar[0].clone(), polar[1].scaled(0.9).unwrap()];
    let r = geometry_check(&shrunk, &[0.5, 0.5], 1e-3).unwrap();
    assert!(r.deficit > 1e-3);
    let too_big = [polar[0].clone(), polar[1].scaled(1.1).unwrap()];
    assert!(matches!(geometry_check(&too_big, &[0.5, 0.5], 1e-3), Err(Error::HypothesisViolated(_))));
    let off = [ConvexBody::interval(-1.0, 3.0).unwrap(), ConvexBody::symmetric_interval(0.5).unwrap()];
    assert!(geometry_check(&off, &[0.5, 0.5], 1e-3).is_err());
}

/// `c = (1, 1)` and `⟨x, Qx⟩ = ½(x₁ − x₂)²`, whose kernel is the diagonal.
fn difference_form() -> QuadraticForm {
    let m = SymMatrix::from_row_slice(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
    QuadraticForm::new(m, BlockStructure::uniform(2, 1).unwrap()).unwrap()
}

fn json_function() -> impl Strategy<Value = GridFunction> {
    (2usize..30, -5.0f64..0.0, 0.5f64..5.0, prop::collection::vec(prop::option::weighted(0.8, -3.0f64..3.0), 30)).prop_filter_map(
        "some finite value",
        |(n, lo, w, vals)| {
            let mut v = vals[..n].to_vec();
            v[0] = Some(0.0);
            GridFunction::new(Grid::line(lo, lo + w, n).ok()?, v).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deficit_invariant_along_kernel(t in -3.0f64..3.0, a in 1.0f64..3.0) {
        let q = difference_form();
        // a·x₁² + a·x₂² − ½(x₁ − x₂)² ≥ ½(x₁ + x₂)² for a ≥ 1.
        let fs = [quad(2.0 * a, 0.0, 0.0), quad(2.0 * a, 0.0, 0.0)];
        let moved: Vec<Potential> = fs.iter().map(|f| f.translated(&[t]).unwrap()).collect();
        let base = bs_inequality_check(&fs, &[1.0, 1.0], &q, 1.0, &BsOptions::default()).unwrap();
        let r = bs_inequality_check(&moved, &[1.0, 1.0], &q, 1.0, &BsOptions::default()).unwrap();
        prop_assert!((base.deficit - r.deficit).abs() < 1e-4);
    }

    #[test]
    fn opposite_translates_gain_quarter_square(v in -2.0f64..2.0) {
        let (c, q, dg) = half();
        let fs = [quad(1.0, 0.0, 0.0).translated(&[v]).unwrap(), quad(1.0, 0.0, 0.0).translated(&[-v]).unwrap()];
        let r = bs_inequality_check(&fs, &c, &q, dg, &BsOptions::default()).unwrap();
        prop_assert!((r.deficit - v * v / 4.0).abs() < 1e-6);
    }

    #[test]
    fn barycenter_follows_translation(v in -3.0f64..3.0, a in 0.5f64..4.0) {
        let f = quad(a, 0.3, 0.0).sample().unwrap();
        let b0 = fn_barycenter(&f).unwrap()[0];
        let b1 = fn_barycenter(&f.translated(&[v]).unwrap()).unwrap()[0];
        prop_assert!((b1 - b0 - v).abs() < 1e-10);
    }

    #[test]
    fn minkowski_is_homogeneous(x in prop::collection::vec(-3.0f64..3.0, 2), t in 0.0f64..5.0, r in 0.3f64..3.0) {
        let bodies = [
            ConvexBody::ball(r, 2).unwrap(),
            ConvexBody::ellipsoid(SymMatrix::from_diagonal(&[r, 1.0 / r]).unwrap()).unwrap(),
            ConvexBody::polytope(vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.0, -r], vec![0.2, 1.0]]).unwrap(),
        ];
        for c in &bodies {
            let p = minkowski(c, &x).unwrap();
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            prop_assert!((minkowski(c, &tx).unwrap() - t * p).abs() < 1e-9 * (1.0 + t * p));
            let s = c.scaled(r).unwrap();
            prop_assert!((minkowski(&s, &x).unwrap() - p / r).abs() < 1e-9 * (1.0 + p));
        }
    }

    #[test]
    fn grid_function_json_round_trip(f in json_function()) {
        let back = GridFunction::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn random_feasible_pairs_hold(seed in 0u64..10_000) {
        let (c, q, dg) = half();
        let fs = random_feasible_potentials(&[0.5, 0.5], 600, seed).unwrap();
        let r = bs_inequality_check(&fs, &c, &q, dg, &BsOptions::default()).unwrap();
        prop_assert!(r.deficit >= -1e-6, "seed {seed}: {}", r.deficit);
    }
}

#[test]
fn grid_function_json_rejects_unknown_keys() {
    assert!(GridFunction::from_json(r#"{"lo":[0],"hi":[1],"cells":[2],"values":[0,0],"extra":1}"#).is_err());
    let f = GridFunction::from_json(r#"{"lo":[0],"hi":[1],"cells":[2],"values":[0,null]}"#).unwrap();
    assert_eq!(f.values(), &[Some(0.0), None]);
}
