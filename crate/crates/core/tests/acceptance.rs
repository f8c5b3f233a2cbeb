//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The process fails only on unexpected failures. A criterion listed in
//! `KNOWN` still prints FAIL, with the reason it cannot pass.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use santalo_lab::cli::presets::{functional_presets, mmot_presets, sinkhorn_agreement};
use santalo_lab::couplings::{max_coupling_gaussian, DiscreteMeasure, QuadraticForm};
use santalo_lab::functional::{
    bs_inequality_check, duality_transfer, geometry_check, random_feasible_potentials, BsOptions, ConvexBody, Potential,
};
use santalo_lab::gaussian::GaussianMeasure;
use santalo_lab::grid::{clt_flow, Grid, GridMeasure};
use santalo_lab::linalg::{BlockStructure, SymMatrix};
use santalo_lab::sharp_constant::{
    barycenter_form_constant, dg_compute, empirical_d_scan, encode_barycenter_form, test_family, DgOptions,
};
use santalo_lab::suite::{
    displacement_convexity_check, entropy_inequality_check, equivalence_check, multimarginal_form_check,
    proof_chain_check, quadratic_identity_probe, symm_talagrand_check, talagrand_barycenter_check, Marginals,
};
use santalo_lab::{Error, Result};

/// Criteria that cannot pass as stated, with the reason.
const KNOWN: [(&str, &str); 1] = [(
    "AC8",
    "with f_i(x) = (x - v)^2/2 for both i the pointwise constraint fails at x_1 = x_2 = 2v \
     (margin -v^2/2), and the form's matrix is nonsingular, so no common translate of the \
     saturators is admissible; opposite translates are admissible but gain v^2/4",
)];

struct Outcome {
    pass: bool,
    detail: String,
    /// A failure may be matched against `KNOWN`.
    excusable: bool,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail, excusable: true })
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed()))
}

fn normals(vars: &[f64]) -> Marginals {
    Marginals::Gaussian(vars.iter().map(|&v| GaussianMeasure::scalar(0.0, v).unwrap()).collect())
}

fn ac1() -> Result<Outcome> {
    let cases: [(&[f64], usize, f64); 3] =
        [(&[0.5, 0.5], 1, 0.459_469_2), (&[1.0 / 3.0; 3], 1, 0.612_625_7), (&[0.3, 0.7], 2, 0.771_908_4)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (lambda, d, want) in cases {
        let p = encode_barycenter_form(lambda, d)?;
        let (r, t) = timed(|| dg_compute(&p, &DgOptions::default()))?;
        let closed = barycenter_form_constant(lambda, d)?;
        let ok = (r.value - want).abs() <= 1e-3 && (r.value - closed).abs() <= 1e-3 && t < Duration::from_secs(120);
        pass &= ok;
        parts.push(format!("n={} d={d}: {:.7} ({:.0?})", lambda.len(), r.value, t));
    }
    outcome(pass, parts.join("; "))
}

fn ac2() -> Result<Outcome> {
    let m = normals(&[2.0, 0.5]);
    let half = [0.5, 0.5];
    let ((a, b, c), t) = timed(|| {
        Ok((
            talagrand_barycenter_check(&m, &half, None)?,
            multimarginal_form_check(&m, &half, None)?,
            symm_talagrand_check(&m, None)?,
        ))
    })?;
    let near = |x: f64, y: f64| (x - y).abs() <= 1e-8;
    let pass = near(a.lhs, 0.125)
        && near(a.rhs, 0.125)
        && near(b.lhs, 0.0625)
        && near(b.rhs, 0.0625)
        && near(c.lhs, 0.25)
        && near(c.rhs, 0.25)
        && t < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "{:.10}={:.10}, {:.10}={:.10}, {:.10}={:.10} ({t:.0?})",
            a.lhs, a.rhs, b.lhs, b.rhs, c.lhs, c.rhs
        ),
    )
}

fn ac3() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (n, d) in [(3, 1), (3, 2), (4, 1), (5, 3)] {
        let lambda: Vec<f64> = (1..=n).map(|k| k as f64 * 2.0 / (n * (n + 1)) as f64).collect();
        let gs = vec![GaussianMeasure::standard(d); n];
        let m = Marginals::Gaussian(gs.clone());
        let p = encode_barycenter_form(&lambda, d)?;
        let dg = barycenter_form_constant(&lambda, d)?;
        let reports = [
            talagrand_barycenter_check(&m, &lambda, None)?,
            multimarginal_form_check(&m, &lambda, None)?,
            equivalence_check(&m, &lambda, None)?,
            displacement_convexity_check(&m, &lambda, None)?,
            proof_chain_check(&gs, &lambda, None)?,
            entropy_inequality_check(&m, p.c(), p.q(), dg, None, None)?,
        ];
        for r in reports {
            worst = worst.max(r.deficit.abs());
        }
    }
    let third = [1.0 / 3.0; 3];
    let mut strict = f64::INFINITY;
    for i in 0..3 {
        let mut v = [1.0; 3];
        v[i] = 1.2;
        strict = strict.min(multimarginal_form_check(&normals(&v), &third, None)?.deficit);
    }
    outcome(worst <= 1e-10 && strict >= 1e-4, format!("max |deficit| at identity {worst:.1e}; perturbed deficit {strict:.3e}"))
}

fn random_cov(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    SymMatrix::new(&b * b.transpose() + DMatrix::identity(d, d) * 0.2).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn ac4() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut gauss: f64 = 0.0;
    for _ in 0..40 {
        let n = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=3);
        let lambda = random_simplex(&mut rng, n);
        let m = Marginals::Gaussian((0..n).map(|_| GaussianMeasure::centered(random_cov(&mut rng, d)).unwrap()).collect());
        let r = equivalence_check(&m, &lambda, None)?;
        gauss = gauss.max((r.lhs - r.rhs).abs());
    }
    let mut discrete: f64 = 0.0;
    for _ in 0..40 {
        let n = rng.gen_range(2..=3);
        let lambda = random_simplex(&mut rng, n);
        let ms = (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=5);
                let pts: Vec<DVector<f64>> = (0..k).map(|_| DVector::from_vec(vec![rng.gen_range(-2.0..2.0)])).collect();
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                DiscreteMeasure::normalized(pts, w).unwrap()
            })
            .collect();
        let r = equivalence_check(&Marginals::Discrete(ms), &lambda, None)?;
        discrete = discrete.max((r.lhs - r.rhs).abs());
    }
    outcome(gauss <= 1e-8 && discrete <= 1e-9, format!("gaussian {gauss:.1e}, discrete {discrete:.1e}"))
}

fn two_marginal_oracle(q: &QuadraticForm, a: &SymMatrix, b: &SymMatrix) -> f64 {
    let diag = (q.block(0, 0).unwrap() * a.as_matrix()).trace() + (q.block(1, 1).unwrap() * b.as_matrix()).trace();
    let m = a.sqrt_psd().unwrap().as_matrix() * (q.block(0, 1).unwrap() * 2.0) * b.sqrt_psd().unwrap().as_matrix();
    diag + m.singular_values().sum()
}

/// Best correlation matrix for three scalar marginals, searched over Gram
/// matrices of unit vectors in hyperspherical angles with zoomed grids.
fn correlation_search(q: &[[f64; 3]; 3], k: &[f64; 3]) -> f64 {
    let s: Vec<f64> = k.iter().map(|x| x.sqrt()).collect();
    let value = |a: f64, b: f64, c: f64| {
        let u = [[1.0, 0.0, 0.0], [a.cos(), a.sin(), 0.0], [b.cos(), b.sin() * c.cos(), b.sin() * c.sin()]];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let rho: f64 = (0..3).map(|t| u[i][t] * u[j][t]).sum();
                v += q[i][j] * s[i] * s[j] * rho;
            }
        }
        v
    };
    let mut best = (f64::NEG_INFINITY, PI, PI, PI);
    let mut half = PI;
    for _ in 0..40 {
        let (ca, cb, cc) = (best.1, best.2, best.3);
        let m = 24;
        let t = |i: usize, ctr: f64| ctr - half + 2.0 * half * i as f64 / m as f64;
        for ia in 0..=m {
            for ib in 0..=m {
                for ic in 0..=m {
                    let (a, b, c) = (t(ia, ca), t(ib, cb), t(ic, cc));
                    let v = value(a, b, c);
                    if v > best.0 {
                        best = (v, a, b, c);
                    }
                }
            }
        }
        half *= 0.4;
    }
    best.0
}

fn ac5() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rel: f64 = 0.0;
    for _ in 0..50 {
        let (d1, d2) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let n = d1 + d2;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = QuadraticForm::new(SymMatrix::new((&m + m.transpose()) * 0.5)?, BlockStructure::new(vec![d1, d2])?)?;
        let (a, b) = (random_cov(&mut rng, d1), random_cov(&mut rng, d2));
        let want = two_marginal_oracle(&q, &a, &b);
        let got = max_coupling_gaussian(&q, &[a, b])?.value;
        rel = rel.max((got - want).abs() / want.abs().max(1.0));
    }
    let mut brute: f64 = 0.0;
    for _ in 0..10 {
        let mut qm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = rng.gen_range(-1.0..1.0);
                qm[i][j] = v;
                qm[j][i] = v;
            }
        }
        let k = [rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0)];
        let rows: Vec<Vec<f64>> = qm.iter().map(|r| r.to_vec()).collect();
        let q = QuadraticForm::new(SymMatrix::from_rows(&rows)?, BlockStructure::uniform(3, 1)?)?;
        let covs: Vec<SymMatrix> = k.iter().map(|&x| SymMatrix::scalar(x).unwrap()).collect();
        let got = max_coupling_gaussian(&q, &covs)?.value;
        brute = brute.max((got - correlation_search(&qm, &k)).abs());
    }
    outcome(rel <= 1e-6 && brute <= 1e-8, format!("two-marginal oracle rel {rel:.1e}; d=1 search {brute:.1e}"))
}

fn ac6() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for inst in mmot_presets() {
        let a = sinkhorn_agreement(&inst)?;
        let worst = a
            .plug_in
            .iter()
            .zip(&a.bounds)
            .map(|(p, b)| (p - a.exact).abs() / b)
            .fold(0.0, f64::max);
        pass &= worst <= 1.0 && a.monotonicity_violation <= 1e-9;
        parts.push(format!("{} err/bound {worst:.3}", inst.name));
    }
    outcome(pass, parts.join(", "))
}

fn ac7() -> Result<Outcome> {
    let s = 3f64.sqrt();
    let start = GridMeasure::uniform_1d(Grid::line(-4.0 * s, 4.0 * s, 4096)?, -s, s)?;
    let (tr, t) = timed(|| clt_flow(&start, 10))?;
    let target = 0.5 * (2.0 * PI * E).ln();
    let min_step = tr.windows(2).map(|w| w[1].entropy - w[0].entropy).fold(f64::INFINITY, f64::min);
    let drift = tr.windows(2).map(|w| (w[1].var - w[0].var).abs() / w[0].var).fold(0.0, f64::max);
    let reached = tr.iter().position(|p| (p.entropy - target).abs() < 1e-2);
    let pass = min_step >= -1e-6 && reached.is_some() && drift <= 1e-6 && t < Duration::from_secs(30);
    outcome(
        pass,
        format!(
            "entropy {:.6} -> {:.10}, within 1e-2 at step {reached:?}, min step {min_step:.1e}, drift {drift:.1e} ({t:.1?})",
            tr[0].entropy, tr[10].entropy
        ),
    )
}

fn quadratic(v: f64) -> Potential {
    let grid = Grid::line(-12.0, 12.0, 480).unwrap();
    Potential::new(grid, move |x: &[f64]| Some(0.5 * (x[0] - v).powi(2)))
}

fn ac8() -> Result<Outcome> {
    let p = encode_barycenter_form(&[0.5, 0.5], 1)?;
    let dg = barycenter_form_constant(&[0.5, 0.5], 1)?;
    let opts = BsOptions::default();
    let sat = bs_inequality_check(&[quadratic(0.0), quadratic(0.0)], p.c(), p.q(), dg, &opts)?.deficit;

    let v = 1.0;
    let moved = [quadratic(0.0).translated(&[v])?, quadratic(0.0).translated(&[v])?];
    let (translated_ok, translated) = match bs_inequality_check(&moved, p.c(), p.q(), dg, &opts) {
        Ok(r) => (r.deficit.abs() <= 1e-4, format!("deficit {:.3e}", r.deficit)),
        Err(Error::HypothesisViolated(m)) => (false, format!("hypothesis violated ({m})")),
        Err(e) => return Err(e),
    };
    let opposite = [quadratic(0.0).translated(&[v])?, quadratic(0.0).translated(&[-v])?];
    let opp = bs_inequality_check(&opposite, p.c(), p.q(), dg, &opts)?.deficit;

    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let fs = random_feasible_potentials(&[0.5, 0.5], 1000, seed)?;
        worst = worst.min(bs_inequality_check(&fs, p.c(), p.q(), dg, &opts)?.deficit);
    }
    let others = sat.abs() <= 1e-6 && worst >= -1e-6;
    Ok(Outcome {
        pass: others && translated_ok,
        detail: format!(
            "saturators {sat:.1e}; common translate by {v}: {translated}; opposite translates deficit {opp:.6}; \
             200 random min deficit {worst:.4}"
        ),
        excusable: others,
    })
}

fn ac9() -> Result<Outcome> {
    let p = encode_barycenter_form(&[0.5, 0.5], 1)?;
    let dg = barycenter_form_constant(&[0.5, 0.5], 1)?;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for inst in functional_presets(9, 20)? {
        match duality_transfer(&inst.potentials, p.c(), p.q(), dg, 2e-2) {
            Ok(r) => {
                worst = worst.min(r.deficit);
                count += 1;
            }
            Err(Error::HypothesisViolated(_)) => {}
            Err(e) => return Err(e),
        }
    }
    outcome(count > 0 && worst >= -2e-2, format!("{count} feasible instances, min entropy-side deficit {worst:.4}"))
}

fn ac10() -> Result<Outcome> {
    let mut balls: f64 = 0.0;
    for (d, lambda) in [(1, vec![0.5, 0.5]), (2, vec![0.3, 0.7]), (2, vec![0.2, 0.3, 0.5]), (3, vec![0.25; 4])] {
        let bodies = vec![ConvexBody::ball(1.0, d)?; lambda.len()];
        balls = balls.max(geometry_check(&bodies, &lambda, 1e-3)?.deficit.abs());
    }
    let polar = [ConvexBody::symmetric_interval(2.0)?, ConvexBody::symmetric_interval(0.5)?];
    let pair = geometry_check(&polar, &[0.5, 0.5], 1e-3)?.deficit;
    let shrunk = [polar[0].clone(), polar[1].scaled(0.9)?];
    let strict = geometry_check(&shrunk, &[0.5, 0.5], 1e-3)?.deficit;
    outcome(
        balls <= 1e-3 && pair.abs() <= 1e-3 && strict > 1e-3,
        format!("balls {balls:.1e}, polar pair {pair:.1e}, shrunk {strict:.4}"),
    )
}

fn ac11() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n1 in 2..=6 {
        for d in 1..=3 {
            worst = worst.max(quadratic_identity_probe(n1, d, 10_000, (n1 * 10 + d) as u64)?);
        }
    }
    outcome(worst <= 1e-11, format!("max relative residual {worst:.1e}"))
}

fn ac12() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut total = 0;
    for (lambda, count, seed) in [(vec![0.3, 0.7], 100, 12), (vec![0.5, 0.5], 40, 13), (vec![1.0 / 3.0; 3], 40, 14)] {
        let p = encode_barycenter_form(&lambda, 1)?;
        let dg = barycenter_form_constant(&lambda, 1)?;
        let family = test_family(lambda.len(), count, 1024, seed)?;
        let r = empirical_d_scan(&p, &family, dg, 2e-2)?;
        pass &= r.min_deficit >= -2e-2 && r.failures == 0;
        total += family.len();
        parts.push(format!("n={} min {:.5}", lambda.len(), r.min_deficit));
    }
    outcome(pass, format!("{total} members: {}", parts.join(", ")))
}

type Criterion = (&'static str, &'static str, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("AC1", "sharp constant for the barycenter form", ac1),
        ("AC2", "equality case n = 2", ac2),
        ("AC3", "equality and strictness for n >= 3", ac3),
        ("AC4", "barycenter / multimarginal equivalence", ac4),
        ("AC5", "Gaussian coupling SDP", ac5),
        ("AC6", "Sinkhorn against exact transport", ac6),
        ("AC7", "entropy along doubling", ac7),
        ("AC8", "functional inequality: saturation, translation, random", ac8),
        ("AC9", "duality transfer", ac9),
        ("AC10", "volume products of convex bodies", ac10),
        ("AC11", "quadratic-form identity", ac11),
        ("AC12", "Gaussian saturation probe", ac12),
    ];
    let mut unexpected = Vec::new();
    for (id, title, f) in criteria {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}"), excusable: false });
        println!("{id} {} {title}: {} [{:.1?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed());
        if !o.pass {
            match KNOWN.iter().find(|(k, _)| *k == id) {
                Some((_, why)) if o.excusable => println!("     known failure: {why}"),
                _ => unexpected.push(id),
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
