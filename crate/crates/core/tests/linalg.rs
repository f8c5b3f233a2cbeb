use nalgebra::DMatrix;
use proptest::prelude::*;
use santalo_lab::linalg::{check_simplex, BlockStructure, SymMatrix};
use santalo_lab::Error;

fn sym(n: usize, v: &[f64]) -> SymMatrix {
    SymMatrix::from_row_slice(n, v).unwrap()
}

#[test]
fn block_reads() {
    let id = SymMatrix::identity(3);
    let bs = BlockStructure::new(vec![1, 2]).unwrap();
    assert_eq!(id.block(&bs, 0, 0).unwrap(), DMatrix::from_element(1, 1, 1.0));
    assert_eq!(id.block(&bs, 0, 1).unwrap(), DMatrix::zeros(1, 2));
    let a = sym(2, &[0.0, 0.25, 0.25, 0.0]);
    let bs = BlockStructure::uniform(2, 1).unwrap();
    assert_eq!(a.block(&bs, 0, 1).unwrap()[(0, 0)], 0.25);
}

#[test]
fn block_dimension_mismatch() {
    let bs = BlockStructure::new(vec![2, 2]).unwrap();
    assert!(matches!(SymMatrix::identity(3).block(&bs, 0, 1), Err(Error::Dimension(_))));
    assert!(BlockStructure::new(vec![]).is_err());
    assert!(BlockStructure::new(vec![1, 0]).is_err());
}

#[test]
fn psd_screen() {
    assert!(SymMatrix::identity(2).is_psd(1e-12));
    assert!(!sym(1, &[-1.0]).is_psd(1e-12));
    assert!(sym(2, &[2.0, 1.0, 1.0, 0.5]).is_psd(1e-12));
    assert!(SymMatrix::from_row_slice(1, &[f64::NAN]).is_err());
}

#[test]
fn square_roots() {
    assert!((sym(1, &[4.0]).sqrt_psd().unwrap().get(0, 0) - 2.0).abs() < 1e-14);
    let id = SymMatrix::identity(3);
    assert!(id.sqrt_psd().unwrap().sub(&id).unwrap().frobenius() < 1e-14);
    let r = sym(2, &[2.0, 0.0, 0.0, 0.5]).sqrt_psd().unwrap();
    assert!((r.get(0, 0) - 2f64.sqrt()).abs() < 1e-14);
    assert!((r.get(1, 1) - 0.5f64.sqrt()).abs() < 1e-14);
    assert!(r.get(0, 1).abs() < 1e-14);
    assert!(matches!(sym(1, &[-1.0]).sqrt_psd(), Err(Error::NotPsd { .. })));
}

#[test]
fn logdet_values() {
    assert!(SymMatrix::identity(4).logdet().unwrap().abs() < 1e-14);
    assert!(sym(2, &[2.0, 0.0, 0.0, 0.5]).logdet().unwrap().abs() < 1e-14);
    assert!((sym(1, &[2.0]).logdet().unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
    assert!(sym(2, &[1.0, 1.0, 1.0, 1.0]).logdet().is_err());
    assert!(sym(1, &[-3.0]).logdet().is_err());
}

#[test]
fn projection_values() {
    assert_eq!(sym(1, &[-1.0]).project_psd().get(0, 0), 0.0);
    let p = sym(2, &[0.0, 1.0, 1.0, 0.0]).project_psd();
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        assert!((p.get(i, j) - 0.5).abs() < 1e-14);
    }
    let a = sym(2, &[2.0, 1.0, 1.0, 0.5]);
    assert!(a.project_psd().sub(&a).unwrap().frobenius() <= 1e-12);
}

#[test]
fn simplex() {
    assert!(check_simplex(&[0.5, 0.5]).is_ok());
    assert!(matches!(check_simplex(&[0.5, 0.6]), Err(Error::Simplex(_))));
    assert!(check_simplex(&[1.5, -0.5]).is_err());
    assert!(check_simplex(&[]).is_err());
}

fn spd(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let b = DMatrix::from_row_slice(n, n, &v);
        SymMatrix::new(&b * b.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
    })
}

fn any_sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        let b = DMatrix::from_row_slice(n, n, &v);
        SymMatrix::new((&b + b.transpose()) * 0.5).unwrap()
    })
}

proptest! {
    #[test]
    fn sqrt_squares_back(a in (1usize..5).prop_flat_map(spd)) {
        let r = a.sqrt_psd().unwrap();
        let back = r.as_matrix() * r.as_matrix();
        prop_assert!((back - a.as_matrix()).amax() <= 1e-10 * a.max_abs().max(1.0));
        prop_assert!(r.is_psd(1e-12));
    }

    #[test]
    fn logdet_matches_eigenvalues(a in (1usize..5).prop_flat_map(spd)) {
        let s: f64 = a.eigen().values.iter().map(|l| l.ln()).sum();
        prop_assert!((a.logdet().unwrap() - s).abs() <= 1e-10 * s.abs().max(1.0));
    }

    #[test]
    fn inverse_is_inverse(a in (1usize..5).prop_flat_map(spd)) {
        let n = a.order();
        let p = a.as_matrix() * a.inverse_pd().unwrap().as_matrix();
        prop_assert!((p - DMatrix::identity(n, n)).amax() < 1e-8);
    }

    #[test]
    fn projection_is_idempotent_and_psd(a in (1usize..5).prop_flat_map(any_sym)) {
        let p = a.project_psd();
        prop_assert!(p.min_eigenvalue() >= -1e-12 * a.max_abs().max(1.0));
        prop_assert!(p.project_psd().sub(&p).unwrap().frobenius() <= 1e-10);
        // Nearest point: the residual is negative semidefinite.
        prop_assert!(p.sub(&a).unwrap().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn symmetric_eigen_is_sorted(a in (1usize..5).prop_flat_map(any_sym)) {
        let e = a.eigen();
        prop_assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = e.values.iter().sum();
        prop_assert!((tr - a.trace()).abs() < 1e-10);
    }
}
