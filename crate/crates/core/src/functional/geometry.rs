use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use statrs::function::gamma::gamma;

use super::Potential;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{check_simplex, SymMatrix};
use crate::report::InequalityReport;

/// Bodies containing the origin in their interior.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball { radius: f64 },
    /// `{x : xᵀ A⁻¹ x ≤ 1}`.
    Ellipsoid { shape: SymMatrix },
    /// `{x : a_k · x ≤ 1 for all k}`.
    Polytope { normals: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    kind: BodyKind,
    dim: usize,
    inverse: Option<DMatrix<f64>>,
    /// Half-widths of the bounding box.
    extent: Vec<f64>,
}

impl ConvexBody {
    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || dim == 0 {
            return Err(Error::Invalid(format!("ball needs a positive radius and dimension, got {radius}, {dim}")));
        }
        Ok(Self { kind: BodyKind::Ball { radius }, dim, inverse: None, extent: vec![radius; dim] })
    }

    pub fn ellipsoid(shape: SymMatrix) -> Result<Self> {
        let inverse = shape.inverse_pd()?.into_inner();
        let dim = shape.order();
        let extent = (0..dim).map(|k| shape.get(k, k).sqrt()).collect();
        Ok(Self { kind: BodyKind::Ellipsoid { shape }, dim, inverse: Some(inverse), extent })
    }

    pub fn polytope(normals: Vec<Vec<f64>>) -> Result<Self> {
        let dim = normals.first().map_or(0, Vec::len);
        if dim == 0 || normals.iter().any(|a| a.len() != dim) {
            return Err(Error::Dimension("polytope normals must share a positive dimension".into()));
        }
        if normals.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polytope normals"));
        }
        let extent = polytope_extent(&normals)?;
        Ok(Self { kind: BodyKind::Polytope { normals }, dim, inverse: None, extent })
    }

    /// `[a, b]` with `a < 0 < b`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < 0.0 && b > 0.0) {
            return Err(Error::Invalid(format!("interval [{a}, {b}] must contain 0 in its interior")));
        }
        Self::polytope(vec![vec![1.0 / b], vec![1.0 / a]])
    }

    pub fn symmetric_interval(r: f64) -> Result<Self> {
        Self::interval(-r, r)
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `t·C` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Invalid(format!("scale must be positive, got {t}")));
        }
        match &self.kind {
            BodyKind::Ball { radius } => Self::ball(radius * t, self.dim),
            BodyKind::Ellipsoid { shape } => Self::ellipsoid(shape.scale(t * t)),
            BodyKind::Polytope { normals } => {
                Self::polytope(normals.iter().map(|a| a.iter().map(|v| v / t).collect()).collect())
            }
        }
    }

    fn radius_bound(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { shape } => shape.eigen().values.max().sqrt(),
            BodyKind::Polytope { .. } => self.extent.iter().map(|e| e * e).sum::<f64>().sqrt(),
        }
    }

    /// Exact volume; polytopes only up to dimension two.
    pub fn volume(&self) -> Result<f64> {
        match &self.kind {
            BodyKind::Ball { radius } => Ok(unit_ball_volume(self.dim) * radius.powi(self.dim as i32)),
            BodyKind::Ellipsoid { shape } => Ok(unit_ball_volume(self.dim) * (0.5 * shape.logdet()?).exp()),
            BodyKind::Polytope { normals } => match self.dim {
                1 => Ok(interval_ends(normals).1 - interval_ends(normals).0),
                2 => Ok(polygon_area_centroid(&self.polygon(normals)).0),
                d => Err(Error::Invalid(format!("no direct polytope volume in dimension {d}"))),
            },
        }
    }

    /// Center of mass of the uniform measure on the body.
    pub fn centroid(&self) -> Result<Vec<f64>> {
        match &self.kind {
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } => Ok(vec![0.0; self.dim]),
            BodyKind::Polytope { normals } => match self.dim {
                1 => {
                    let (a, b) = interval_ends(normals);
                    Ok(vec![0.5 * (a + b)])
                }
                2 => Ok(polygon_area_centroid(&self.polygon(normals)).1.to_vec()),
                d => Err(Error::Invalid(format!("no polytope centroid in dimension {d}"))),
            },
        }
    }

    fn polygon(&self, normals: &[Vec<f64>]) -> Vec<[f64; 2]> {
        let b = 2.0 * self.extent.iter().fold(0.0f64, |m, e| m.max(*e));
        let mut poly = vec![[-b, -b], [b, -b], [b, b], [-b, b]];
        for a in normals {
            poly = clip(&poly, a[0], a[1]);
        }
        poly
    }
}

fn interval_ends(normals: &[Vec<f64>]) -> (f64, f64) {
    let hi = normals.iter().map(|a| a[0]).filter(|a| *a > 0.0).fold(0.0f64, f64::max);
    let lo = normals.iter().map(|a| a[0]).filter(|a| *a < 0.0).fold(0.0f64, f64::min);
    (1.0 / lo, 1.0 / hi)
}

/// Sutherland–Hodgman against the half-plane `a x + b y ≤ 1`.
fn clip(poly: &[[f64; 2]], a: f64, b: f64) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| a * p[0] + b * p[1] - 1.0;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area_centroid(poly: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let mut area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let cross = p[0] * q[1] - q[0] * p[1];
        area += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    area *= 0.5;
    (area.abs(), [cx / (6.0 * area), cy / (6.0 * area)])
}

/// Coordinate extents by linear programming; fails for unbounded polytopes.
fn polytope_extent(normals: &[Vec<f64>]) -> Result<Vec<f64>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let d = normals[0].len();
    let mut extent = vec![0.0f64; d];
    for (j, e) in extent.iter_mut().enumerate() {
        for dir in [OptimizationDirection::Maximize, OptimizationDirection::Minimize] {
            let mut lp = Problem::new(dir);
            let vars: Vec<_> = (0..d)
                .map(|k| lp.add_var(if k == j { 1.0 } else { 0.0 }, (f64::NEG_INFINITY, f64::INFINITY)))
                .collect();
            for a in normals {
                let expr: Vec<_> = vars.iter().zip(a).map(|(v, c)| (*v, *c)).collect();
                lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
            }
            match lp.solve() {
                Ok(out) => {
                    let sol = out.into_solution().map_err(|err| Error::Solver(format!("{err:?}")))?;
                    *e = e.max(sol.objective().abs());
                }
                Err(microlp::Error::Unbounded) => {
                    return Err(Error::Invalid("polytope is unbounded".into()));
                }
                Err(err) => return Err(Error::Solver(format!("{err:?}"))),
            }
        }
    }
    Ok(extent)
}

/// `vol(B_2^d) = π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Gauge `p_C(x) = inf{t > 0 : x ∈ tC}`.
pub fn minkowski(c: &ConvexBody, x: &[f64]) -> Result<f64> {
    if x.len() != c.dim {
        return Err(Error::Dimension(format!("point of dimension {} for body of dimension {}", x.len(), c.dim)));
    }
    Ok(gauge(c, x))
}

fn gauge(c: &ConvexBody, x: &[f64]) -> f64 {
    match &c.kind {
        BodyKind::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>().sqrt() / radius,
        BodyKind::Ellipsoid { .. } => {
            let inv = c.inverse.as_ref().expect("ellipsoid keeps its inverse");
            let v = DVector::from_column_slice(x);
            v.dot(&(inv * &v)).max(0.0).sqrt()
        }
        BodyKind::Polytope { normals } => normals
            .iter()
            .map(|a| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .fold(0.0, f64::max),
    }
}

/// `vol(C) = vol(B_2^d) (2π)^{−d/2} ∫ e^{−p_C(x)²/2} dx` by refined midpoint
/// quadrature, for `d ≤ 2`.
pub fn body_volume_via_layercake(c: &ConvexBody) -> Result<f64> {
    let d = c.dim;
    if d > 2 {
        return Err(Error::Invalid(format!("layer-cake quadrature supports d ≤ 2, got {d}")));
    }
    let r = 9.0 * c.radius_bound();
    let grid = if d == 1 { Grid::line(-r, r, 240)? } else { Grid::square(-r, r, 120)? };
    // Gaussian tail beyond the box relative to the bulk.
    let edge = (0..grid.len())
        .map(|k| grid.center(k))
        .filter(|x| x.iter().any(|v| v.abs() > r - grid.spacing(0)))
        .map(|x| gauge(c, &x))
        .fold(f64::INFINITY, f64::min);
    if (-0.5 * edge * edge).exp() > 1e-12 {
        return Err(Error::DomainTooSmall(format!("e^(-p^2/2) = {:e} on the boundary", (-0.5 * edge * edge).exp())));
    }
    let body = c.clone();
    let f = Potential::new(grid, move |x: &[f64]| {
        let p = gauge(&body, x);
        Some(0.5 * p * p)
    });
    let quad = f.integrate(1e-9)?;
    Ok(unit_ball_volume(d) * (2.0 * PI).powf(-(d as f64) / 2.0) * quad.mass)
}

/// Geometric consequence of the barycenter form: when
/// `½ Σ λ_i(1−λ_i) p_{C_i}(x_i)² ≥ Σ_{i<j} λ_i λ_j ⟨x_i, x_j⟩` and
/// `C_1, …, C_{n−1}` are centered, `Π vol(C_i)^{q_i} ≤ vol(B_2^d)` with
/// `q_i = λ_i(1−λ_i) / Σ_j λ_j(1−λ_j)`.
pub fn geometry_check(bodies: &[ConvexBody], lambda: &[f64], tol: f64) -> Result<InequalityReport> {
    check_simplex(lambda)?;
    let n = bodies.len();
    if n != lambda.len() || n < 2 {
        return Err(Error::Dimension(format!("{n} bodies for {} weights", lambda.len())));
    }
    let d = bodies[0].dim;
    if bodies.iter().any(|b| b.dim != d) {
        return Err(Error::Dimension("bodies must share a dimension".into()));
    }
    let mut centroid_norms = Vec::new();
    for (i, b) in bodies[..n - 1].iter().enumerate() {
        let cm = b.centroid()?;
        let norm = cm.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-6 * 2.0 * b.radius_bound() {
            return Err(Error::HypothesisViolated(format!("body {i} is not centered: centroid {cm:?}")));
        }
        centroid_norms.push(norm);
    }

    let (margin, probes) = constraint_margin(bodies, lambda);
    if margin < -1e-9 {
        return Err(Error::HypothesisViolated(format!("pointwise constraint fails with normalized margin {margin:e}")));
    }

    let weights: Vec<f64> = lambda.iter().map(|l| l * (1.0 - l)).collect();
    let total: f64 = weights.iter().sum();
    let volumes = bodies.iter().map(ConvexBody::volume).collect::<Result<Vec<_>>>()?;
    let log_lhs: f64 = weights.iter().zip(&volumes).map(|(w, v)| w / total * v.ln()).sum();
    let ball = unit_ball_volume(d);
    let mut report = InequalityReport::with_deficit("geometry", log_lhs.exp(), ball, ball.ln() - log_lhs, tol);
    report.insert_meta("deficit_kind", "log_ratio");
    report.insert_meta("volumes", json!(volumes));
    report.insert_meta("exponents", json!(weights.iter().map(|w| w / total).collect::<Vec<_>>()));
    report.insert_meta("constraint_margin", margin);
    report.insert_meta("constraint_probes", probes as f64);
    report.insert_meta("centroid_norms", json!(centroid_norms));
    Ok(report)
}

/// Minimum of the constraint margin divided by `|x|²`, over a 41-point
/// product grid on `[−1, 1]^{nd}` when `nd ≤ 4`, else `10^6` uniform samples of the cube.
fn constraint_margin(bodies: &[ConvexBody], lambda: &[f64]) -> (f64, usize) {
    let n = bodies.len();
    let d = bodies[0].dim;
    let total = n * d;
    let eval = |x: &[f64]| -> Option<f64> {
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            return None;
        }
        let mut m = 0.0;
        for i in 0..n {
            let p = gauge(&bodies[i], &x[i * d..(i + 1) * d]);
            m += 0.5 * lambda[i] * (1.0 - lambda[i]) * p * p;
            for j in i + 1..n {
                let dot: f64 = (0..d).map(|a| x[i * d + a] * x[j * d + a]).sum();
                m -= lambda[i] * lambda[j] * dot;
            }
        }
        Some(m / norm2)
    };
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; total];
    if total <= 4 {
        const POINTS: usize = 41;
        let count = POINTS.pow(total as u32);
        for k in 0..count {
            let mut t = k;
            for v in x.iter_mut() {
                *v = -1.0 + 2.0 * (t % POINTS) as f64 / (POINTS - 1) as f64;
                t /= POINTS;
            }
            if let Some(m) = eval(&x) {
                best = best.min(m);
            }
        }
        (best, count)
    } else {
        let count = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..count {
            for v in x.iter_mut() {
                *v = rng.gen_range(-1.0..=1.0);
            }
            if let Some(m) = eval(&x) {
                best = best.min(m);
            }
        }
        (best, count)
    }
}
