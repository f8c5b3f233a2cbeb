//! Named instances shipped with the harness.

use nalgebra::DVector;

use crate::couplings::{mmot_exact, mmot_sinkhorn, CostSpec, DiscreteMeasure, Sense};
use crate::error::{Error, Result};
use crate::functional::{
    bs_inequality_check, duality_transfer, geometry_check, random_feasible_potentials, BsOptions, ConvexBody,
    Potential, ProbeSpec,
};
use crate::gaussian::GaussianMeasure;
use crate::grid::{Grid, GridMeasure};
use crate::linalg::SymMatrix;
use crate::report::InequalityReport;
use crate::sharp_constant::{barycenter_form_constant, dg_compute, encode_barycenter_form, DgOptions};
use crate::suite::*;

pub const SUITE_PRESETS: [&str; 6] =
    ["equality-cases", "strict-cases", "barycenter-forms", "mmot-agreement", "functional", "geometry"];

/// Regularization levels used when comparing Sinkhorn against the exact solver.
pub const SINKHORN_EPSILONS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

#[derive(Debug, Clone)]
pub struct MmotInstance {
    pub name: &'static str,
    pub marginals: Vec<DiscreteMeasure>,
    pub cost: CostSpec,
    pub sense: Sense,
}

fn d1(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::from_1d(points, weights).expect("preset measure")
}

fn d2(points: &[[f64; 2]]) -> DiscreteMeasure {
    DiscreteMeasure::uniform(points.iter().map(|p| DVector::from_column_slice(p)).collect()).expect("preset measure")
}

pub fn mmot_presets() -> Vec<MmotInstance> {
    let third = 1.0 / 3.0;
    vec![
        MmotInstance {
            name: "w2-line",
            marginals: vec![
                d1(&[-1.5, -0.5, 0.0, 0.7, 1.3], &[0.1, 0.25, 0.3, 0.2, 0.15]),
                d1(&[-1.0, -0.2, 0.4, 1.1, 2.0], &[0.2, 0.2, 0.2, 0.2, 0.2]),
            ],
            cost: CostSpec::Pairwise(vec![1.0, 1.0]),
            sense: Sense::Min,
        },
        MmotInstance {
            name: "barycenter-three",
            marginals: vec![
                d1(&[-1.0, 0.0, 1.0, 2.0], &[0.25, 0.25, 0.25, 0.25]),
                d1(&[-2.0, -0.5, 0.5, 1.5], &[0.1, 0.4, 0.3, 0.2]),
                d1(&[-0.8, 0.1, 0.9, 1.2], &[0.3, 0.2, 0.3, 0.2]),
            ],
            cost: CostSpec::Pairwise(vec![third, third, 1.0 - 2.0 * third]),
            sense: Sense::Min,
        },
        MmotInstance {
            name: "barycenter-form-max",
            marginals: vec![
                d1(&[-1.0, 0.0, 1.0], &[0.3, 0.4, 0.3]),
                d1(&[-1.2, 0.3, 0.9], &[0.2, 0.5, 0.3]),
                d1(&[-0.5, 0.5, 1.5], &[0.4, 0.4, 0.2]),
            ],
            cost: CostSpec::Quadratic(encode_barycenter_form(&[0.2, 0.3, 0.5], 1).expect("form").q().clone()),
            sense: Sense::Max,
        },
        MmotInstance {
            name: "w2-plane",
            marginals: vec![
                d2(&[[0.0, 0.0], [1.0, 0.2], [-0.5, 1.0], [0.3, -1.0]]),
                d2(&[[0.5, 0.5], [-1.0, 0.0], [0.0, -0.7], [1.2, 1.1]]),
            ],
            cost: CostSpec::Pairwise(vec![1.0, 1.0]),
            sense: Sense::Min,
        },
    ]
}

/// Sinkhorn plug-in error against the exact value for each of
/// [`SINKHORN_EPSILONS`], and how far the plug-in values are from monotone.
#[derive(Debug, Clone)]
pub struct SinkhornAgreement {
    pub exact: f64,
    pub plug_in: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Largest step in the wrong direction as `ε` decreases; zero when monotone.
    pub monotonicity_violation: f64,
}

pub fn sinkhorn_agreement(inst: &MmotInstance) -> Result<SinkhornAgreement> {
    let exact = mmot_exact(&inst.marginals, &inst.cost, inst.sense)?.value;
    let support: f64 = inst.marginals.iter().map(|m| m.len() as f64).product();
    let mut plug_in = Vec::new();
    let mut bounds = Vec::new();
    for &eps in &SINKHORN_EPSILONS {
        plug_in.push(mmot_sinkhorn(&inst.marginals, &inst.cost, inst.sense, eps)?.value);
        bounds.push(f64::max(1e-3, 3.0 * eps * support.ln()));
    }
    // Plug-in values move toward the optimum as ε shrinks.
    let sign = if inst.sense == Sense::Min { 1.0 } else { -1.0 };
    let monotonicity_violation =
        plug_in.windows(2).map(|w| sign * (w[1] - w[0])).fold(0.0f64, f64::max);
    Ok(SinkhornAgreement { exact, plug_in, bounds, monotonicity_violation })
}

#[derive(Debug, Clone)]
pub struct FunctionalInstance {
    pub name: String,
    pub potentials: Vec<Potential>,
}

fn quadratic(a: f64, center: f64, support: Option<(f64, f64)>) -> Potential {
    let grid = Grid::line(-12.0, 12.0, 480).expect("preset grid");
    let (lo, hi) = support.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    Potential::new(grid, move |x: &[f64]| (x[0] >= lo && x[0] <= hi).then(|| 0.5 * a * (x[0] - center).powi(2)))
}

/// Feasible potential pairs for the barycenter form with weights `(½, ½)` in
/// dimension one; `random` extra pairs come from the seed.
pub fn functional_presets(seed: u64, random: usize) -> Result<Vec<FunctionalInstance>> {
    let grid = Grid::line(-12.0, 12.0, 480)?;
    let kink = Potential::new(grid, |x: &[f64]| Some(0.5 * x[0] * x[0] + 0.5 * (x[0] - 0.3).abs()));
    let mut out = vec![
        FunctionalInstance { name: "gaussian-saturators".into(), potentials: vec![quadratic(1.0, 0.0, None); 2] },
        FunctionalInstance {
            name: "curvature-2-0.5".into(),
            potentials: vec![quadratic(2.0, 0.0, None), quadratic(0.5, 0.0, None)],
        },
        FunctionalInstance {
            name: "curvature-2-1".into(),
            potentials: vec![quadratic(2.0, 0.0, None), quadratic(1.0, 0.0, None)],
        },
        FunctionalInstance {
            name: "truncated".into(),
            potentials: vec![quadratic(1.0, 0.0, Some((-1.5, 2.0))), quadratic(1.0, 0.0, None)],
        },
        FunctionalInstance { name: "kink".into(), potentials: vec![kink, quadratic(1.0, 0.0, None)] },
        FunctionalInstance {
            name: "opposite-translates".into(),
            potentials: vec![quadratic(1.0, 1.0, None), quadratic(1.0, -1.0, None)],
        },
    ];
    for k in 0..random {
        out.push(FunctionalInstance {
            name: format!("random-{k}"),
            potentials: random_feasible_potentials(&[0.5, 0.5], 480, seed.wrapping_add(k as u64))?,
        });
    }
    Ok(out)
}

pub type Job = Box<dyn Fn() -> Result<InequalityReport> + Send + Sync>;

pub struct Item {
    pub name: String,
    pub job: Job,
}

fn item(name: impl Into<String>, job: impl Fn() -> Result<InequalityReport> + Send + Sync + 'static) -> Item {
    Item { name: name.into(), job: Box::new(job) }
}

fn normals(vars: &[f64]) -> Marginals {
    Marginals::Gaussian(vars.iter().map(|v| GaussianMeasure::scalar(0.0, *v).expect("preset variance")).collect())
}

fn standard(n: usize, d: usize) -> Marginals {
    Marginals::Gaussian(vec![GaussianMeasure::standard(d); n])
}

pub fn suite_preset(name: &str, seed: u64) -> Result<Vec<Item>> {
    let half = [0.5, 0.5];
    let third = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let mut items = Vec::new();
    match name {
        "equality-cases" => {
            items.push(item("talagrand_barycenter/normal-2-0.5", move || {
                talagrand_barycenter_check(&normals(&[2.0, 0.5]), &half, None)
            }));
            items.push(item("multimarginal_form/normal-2-0.5", move || {
                multimarginal_form_check(&normals(&[2.0, 0.5]), &half, None)
            }));
            items.push(item("symm_talagrand/normal-2-0.5", || symm_talagrand_check(&normals(&[2.0, 0.5]), None)));
            items.push(item("equivalence/normal-2-0.5", move || equivalence_check(&normals(&[2.0, 0.5]), &half, None)));
            for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
                items.push(item(format!("symm_talagrand/inverse-pair-{c}"), move || {
                    symm_talagrand_check(&normals(&[c, 1.0 / c]), None)
                }));
            }
            let w = [0.2, 0.3, 0.5];
            items.push(item("talagrand_barycenter/standard-3x2", move || {
                talagrand_barycenter_check(&standard(3, 2), &w, None)
            }));
            items.push(item("multimarginal_form/standard-3x2", move || {
                multimarginal_form_check(&standard(3, 2), &w, None)
            }));
            items.push(item("equivalence/standard-3x2", move || equivalence_check(&standard(3, 2), &w, None)));
            items.push(item("displacement_convexity/standard-3x2", move || {
                displacement_convexity_check(&standard(3, 2), &w, None)
            }));
            items.push(item("symm_talagrand/standard-2", || symm_talagrand_check(&standard(2, 2), None)));
            items.push(item("proof_chain/standard-4x1", || {
                proof_chain_check(&vec![GaussianMeasure::standard(1); 4], &[0.1, 0.2, 0.3, 0.4], None)
            }));
            items.push(item("equivalence/diracs-0-2", move || {
                let m = Marginals::Discrete(vec![d1(&[0.0], &[1.0]), d1(&[2.0], &[1.0])]);
                equivalence_check(&m, &half, Some(1e-9))
            }));
            items.push(item("entropy_inequality/gaussian-saturators", move || {
                let p = encode_barycenter_form(&third, 2)?;
                let dg = barycenter_form_constant(&third, 2)?;
                entropy_inequality_check(&standard(3, 2), p.c(), p.q(), dg, None, None)
            }));
            items.push(item("entropy_inequality/translated-saturators", move || {
                let p = encode_barycenter_form(&half, 1)?;
                let dg = barycenter_form_constant(&half, 1)?;
                let m = Marginals::Gaussian(vec![GaussianMeasure::scalar(1.5, 1.0)?, GaussianMeasure::scalar(-0.7, 1.0)?]);
                entropy_inequality_check(&m, p.c(), p.q(), dg, Some(&[1.5, -0.7]), None)
            }));
            items.push(item("bs_inequality/gaussian-saturators", move || {
                let p = encode_barycenter_form(&half, 1)?;
                let dg = barycenter_form_constant(&half, 1)?;
                let opts = BsOptions { probes: ProbeSpec::Auto { seed }, ..BsOptions::default() };
                bs_inequality_check(&[quadratic(1.0, 0.0, None), quadratic(1.0, 0.0, None)], p.c(), p.q(), dg, &opts)
            }));
            items.push(item("duality_transfer/gaussian-saturators", move || {
                let p = encode_barycenter_form(&half, 1)?;
                let dg = barycenter_form_constant(&half, 1)?;
                duality_transfer(&[quadratic(1.0, 0.0, None), quadratic(1.0, 0.0, None)], p.c(), p.q(), dg, GRID_TOL)
            }));
            items.push(item("geometry/balls-3x2", || {
                geometry_check(&[ConvexBody::ball(1.0, 2)?, ConvexBody::ball(1.0, 2)?, ConvexBody::ball(1.0, 2)?], &[0.2, 0.3, 0.5], 1e-3)
            }));
            items.push(item("geometry/polar-intervals", move || {
                geometry_check(&[ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.5)?], &half, 1e-3)
            }));
            items.push(item("geometry/polar-ellipses", move || {
                let a = ConvexBody::ellipsoid(SymMatrix::from_diagonal(&[4.0, 1.0])?)?;
                let b = ConvexBody::ellipsoid(SymMatrix::from_diagonal(&[0.25, 1.0])?)?;
                geometry_check(&[a, b], &half, 1e-3)
            }));
        }
        "strict-cases" => {
            items.push(item("talagrand_barycenter/normal-2-1-0.5", move || {
                talagrand_barycenter_check(&normals(&[2.0, 1.0, 0.5]), &third, None)
            }));
            for k in 0..3 {
                items.push(item(format!("multimarginal_form/perturbed-{k}"), move || {
                    let mut v = [1.0; 3];
                    v[k] = 1.2;
                    multimarginal_form_check(&normals(&v), &third, None)
                }));
            }
            items.push(item("symm_talagrand/normal-2-2", || symm_talagrand_check(&normals(&[2.0, 2.0]), None)));
            items.push(item("displacement_convexity/normal-2-0.5", move || {
                displacement_convexity_check(&normals(&[2.0, 0.5]), &half, None)
            }));
            items.push(item("displacement_convexity/normal-2-1-0.5", move || {
                displacement_convexity_check(&normals(&[2.0, 1.0, 0.5]), &third, None)
            }));
            items.push(item("proof_chain/normal-2-1-0.5", move || {
                let gs: Vec<GaussianMeasure> =
                    [2.0, 1.0, 0.5].iter().map(|v| GaussianMeasure::scalar(0.0, *v)).collect::<Result<_>>()?;
                proof_chain_check(&gs, &third, None)
            }));
            items.push(item("entropy_inequality/uniform-grid", move || {
                let p = encode_barycenter_form(&half, 1)?;
                let dg = barycenter_form_constant(&half, 1)?;
                let u = GridMeasure::uniform_1d(Grid::line(-4.0, 4.0, 800)?, -3f64.sqrt(), 3f64.sqrt())?;
                entropy_inequality_check(&Marginals::Grid(vec![u.clone(), u]), p.c(), p.q(), dg, None, None)
            }));
            items.push(item("geometry/shrunk-polar", move || {
                geometry_check(&[ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.45)?], &half, 1e-3)
            }));
            items.push(item("geometry/square-cross", move || {
                let square = ConvexBody::polytope(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]])?;
                let cross = ConvexBody::polytope(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]])?;
                geometry_check(&[square, cross], &half, 1e-3)
            }));
        }
        "barycenter-forms" => {
            let cases: [(&str, Vec<f64>, usize); 3] = [
                ("n2-d1", vec![0.5, 0.5], 1),
                ("n3-d1", third.to_vec(), 1),
                ("n2-d2", vec![0.3, 0.7], 2),
            ];
            for (label, lambda, d) in cases {
                items.push(item(format!("dg_compute/{label}"), move || {
                    let p = encode_barycenter_form(&lambda, d)?;
                    let r = dg_compute(&p, &DgOptions { seed, ..DgOptions::default() })?;
                    let closed = barycenter_form_constant(&lambda, d)?;
                    Ok(InequalityReport::new("dg_compute", r.value, closed, 1e-3)
                        .with_meta("status", serde_json::to_value(r.status).expect("status")))
                }));
            }
        }
        "mmot-agreement" => {
            for inst in mmot_presets() {
                let name = inst.name;
                let shared = std::sync::Arc::new(inst);
                let a = shared.clone();
                items.push(item(format!("sinkhorn_agreement/{name}"), move || {
                    let s = sinkhorn_agreement(&a)?;
                    let ratio = s.plug_in.iter().zip(&s.bounds).map(|(p, b)| (p - s.exact).abs() / b).fold(0.0, f64::max);
                    Ok(InequalityReport::new("sinkhorn_agreement", ratio, 1.0, 0.0)
                        .with_meta("exact", s.exact)
                        .with_meta("plug_in", serde_json::json!(s.plug_in))
                        .with_meta("epsilons", serde_json::json!(SINKHORN_EPSILONS)))
                }));
                items.push(item(format!("sinkhorn_monotone/{name}"), move || {
                    let s = sinkhorn_agreement(&shared)?;
                    Ok(InequalityReport::new("sinkhorn_monotone", s.monotonicity_violation, 0.0, 1e-9))
                }));
            }
        }
        "functional" => {
            let p = encode_barycenter_form(&half, 1)?;
            let dg = barycenter_form_constant(&half, 1)?;
            for inst in functional_presets(seed, 4)? {
                let (c, q) = (p.c().to_vec(), p.q().clone());
                let fs = inst.potentials.clone();
                items.push(item(format!("bs_inequality/{}", inst.name), move || {
                    let opts = BsOptions { probes: ProbeSpec::Auto { seed }, ..BsOptions::default() };
                    bs_inequality_check(&fs, &c, &q, dg, &opts)
                }));
                let (c, q) = (p.c().to_vec(), p.q().clone());
                let fs = inst.potentials;
                items.push(item(format!("duality_transfer/{}", inst.name), move || {
                    duality_transfer(&fs, &c, &q, dg, GRID_TOL)
                }));
            }
        }
        "geometry" => {
            for d in 1..=3 {
                items.push(item(format!("geometry/balls-2x{d}"), move || {
                    geometry_check(&[ConvexBody::ball(1.0, d)?, ConvexBody::ball(1.0, d)?], &[0.3, 0.7], 1e-3)
                }));
            }
            items.push(item("geometry/polar-intervals", move || {
                geometry_check(&[ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.5)?], &half, 1e-3)
            }));
            items.push(item("geometry/shrunk-polar", move || {
                geometry_check(&[ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.45)?], &half, 1e-3)
            }));
        }
        other => {
            return Err(Error::Invalid(format!("unknown preset {other:?}, expected one of {SUITE_PRESETS:?}")));
        }
    }
    Ok(items)
}
