//! Per-command parameter schemas. Unknown keys are rejected everywhere.

use nalgebra::DVector;
use serde::Deserialize;

use crate::couplings::{CostSpec, DiscreteMeasure, QuadraticForm, Sense};
use crate::error::{Error, Result};
use crate::functional::{ConvexBody, GridFunction, Potential};
use crate::gaussian::GaussianMeasure;
use crate::grid::{Grid, GridMeasure};
use crate::linalg::{BlockStructure, SymMatrix};
use crate::suite::Marginals;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgParams {
    #[serde(default)]
    pub barycenter_form: bool,
    pub n: Option<usize>,
    pub lambda: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub d: usize,
    /// General problem: entropy weights, block dimensions and the full matrix.
    pub c: Option<Vec<f64>>,
    pub dims: Option<Vec<usize>>,
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub delta: f64,
    /// Strictly decreasing schedule; switches to the `δ → 0` scan.
    pub deltas: Option<Vec<f64>>,
    #[serde(default = "twenty")]
    pub starts: usize,
}

fn one() -> usize {
    1
}

fn twenty() -> usize {
    20
}

/// A measure given inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `mean` defaults to zero.
    Gaussian { mean: Option<Vec<f64>>, cov: Vec<Vec<f64>> },
    /// One-dimensional Gaussian.
    Normal { mean: Option<f64>, var: f64 },
    Discrete { points: Vec<Vec<f64>>, weights: Option<Vec<f64>> },
}

impl MeasureSpec {
    fn is_discrete(&self) -> bool {
        matches!(self, MeasureSpec::Discrete { .. })
    }

    pub fn gaussian(&self) -> Result<GaussianMeasure> {
        match self {
            MeasureSpec::Gaussian { mean, cov } => {
                let cov = SymMatrix::from_rows(cov)?;
                let mean = mean.clone().unwrap_or_else(|| vec![0.0; cov.order()]);
                GaussianMeasure::new(DVector::from_vec(mean), cov)
            }
            MeasureSpec::Normal { mean, var } => GaussianMeasure::scalar(mean.unwrap_or(0.0), *var),
            MeasureSpec::Discrete { .. } => Err(Error::Invalid("expected a Gaussian".into())),
        }
    }

    pub fn discrete(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Discrete { points, weights } => {
                let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
                match weights {
                    Some(w) => DiscreteMeasure::new(pts, w.clone()),
                    None => DiscreteMeasure::uniform(pts),
                }
            }
            _ => Err(Error::Invalid("expected a discrete measure".into())),
        }
    }
}

pub fn marginals(specs: &[MeasureSpec]) -> Result<Marginals> {
    if specs.is_empty() {
        return Err(Error::Invalid("no measures given".into()));
    }
    if specs.iter().all(MeasureSpec::is_discrete) {
        Ok(Marginals::Discrete(specs.iter().map(MeasureSpec::discrete).collect::<Result<_>>()?))
    } else if specs.iter().any(MeasureSpec::is_discrete) {
        Err(Error::Invalid("cannot mix Gaussian and discrete measures".into()))
    } else {
        Ok(Marginals::Gaussian(specs.iter().map(MeasureSpec::gaussian).collect::<Result<_>>()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Barycenter,
    Multimarginal,
    Equivalence,
    Symmetrized,
    Displacement,
    ProofChain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TalagrandParams {
    pub measures: Vec<MeasureSpec>,
    pub lambda: Option<Vec<f64>>,
    /// Defaults to every check applicable to the input.
    pub checks: Option<Vec<Check>>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostParams {
    /// `Σ_{i<j} w_i w_j |x_i − x_j|²`.
    Pairwise { weights: Vec<f64> },
    /// `⟨x, Qx⟩` with the given block dimensions.
    Quadratic { dims: Vec<usize>, q: Vec<Vec<f64>> },
}

impl CostParams {
    pub fn build(&self) -> Result<CostSpec> {
        Ok(match self {
            CostParams::Pairwise { weights } => CostSpec::Pairwise(weights.clone()),
            CostParams::Quadratic { dims, q } => CostSpec::Quadratic(quadratic_form(dims, q)?),
        })
    }
}

pub fn quadratic_form(dims: &[usize], q: &[Vec<f64>]) -> Result<QuadraticForm> {
    QuadraticForm::new(SymMatrix::from_rows(q)?, BlockStructure::new(dims.to_vec())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmotMethod {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmotParams {
    /// Inline instance; alternatively `preset`.
    pub marginals: Option<Vec<MeasureSpec>>,
    pub cost: Option<CostParams>,
    pub sense: Option<Sense>,
    pub preset: Option<String>,
    #[serde(default = "exact")]
    pub method: MmotMethod,
    /// Regularization levels for Sinkhorn.
    pub epsilon: Option<Vec<f64>>,
}

fn exact() -> MmotMethod {
    MmotMethod::Exact
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterParams {
    pub measures: Vec<MeasureSpec>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `a (x − center)²/2 + shift` on `[lo, hi]`, `+∞` outside `[support_lo, support_hi]`.
    Quadratic {
        curvature: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        shift: f64,
        support: Option<[f64; 2]>,
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
        #[serde(default = "default_cells")]
        cells: usize,
    },
    /// Values on a grid, `null` for `+∞`.
    Grid { lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>, values: Vec<Option<f64>> },
}

fn default_lo() -> f64 {
    -12.0
}

fn default_hi() -> f64 {
    12.0
}

fn default_cells() -> usize {
    480
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Quadratic { curvature, center, shift, support, lo, hi, cells } => {
                let (a, c, s) = (*curvature, *center, *shift);
                let (slo, shi) = support.map_or((f64::NEG_INFINITY, f64::INFINITY), |s| (s[0], s[1]));
                Ok(Potential::new(Grid::line(*lo, *hi, *cells)?, move |x: &[f64]| {
                    (x[0] >= slo && x[0] <= shi).then(|| 0.5 * a * (x[0] - c).powi(2) + s)
                }))
            }
            PotentialSpec::Grid { lo, hi, cells, values } => Ok(Potential::from_grid_function(GridFunction::new(
                Grid::new(lo.clone(), hi.clone(), cells.clone())?,
                values.clone(),
            )?)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsParams {
    pub lambda: Vec<f64>,
    pub potentials: Option<Vec<PotentialSpec>>,
    /// Number of random feasible instances drawn from the seed.
    #[serde(default)]
    pub random: usize,
    /// Constant; defaults to the closed form for the barycenter form.
    pub constant: Option<f64>,
    /// Also run the entropy-side transfer.
    #[serde(default)]
    pub duality: bool,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Uniform,
    Laplace,
    TwoUniform,
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltParams {
    #[serde(default = "uniform")]
    pub start: Start,
    #[serde(default = "flow_cells")]
    pub cells: usize,
    #[serde(default = "ten")]
    pub steps: usize,
}

fn uniform() -> Start {
    Start::Uniform
}

fn flow_cells() -> usize {
    4096
}

fn ten() -> usize {
    10
}

impl CltParams {
    /// Unit-variance start on a grid wide enough for ten doublings.
    pub fn start_measure(&self) -> Result<GridMeasure> {
        let r = 4.0 * 3f64.sqrt();
        match self.start {
            Start::Uniform => GridMeasure::uniform_1d(Grid::line(-r, r, self.cells)?, -3f64.sqrt(), 3f64.sqrt()),
            Start::Laplace => {
                let b = 0.5f64.sqrt();
                GridMeasure::from_cdf(Grid::line(-3.0 * r, 3.0 * r, self.cells)?, move |x| {
                    if x < 0.0 {
                        0.5 * (x / b).exp()
                    } else {
                        1.0 - 0.5 * (-x / b).exp()
                    }
                })
            }
            Start::TwoUniform => {
                // Equal mixture of U[-1.2,-0.4] and U[0.4,1.2], rescaled to unit variance.
                let s = (2.4f64 / (1.2f64.powi(3) - 0.4f64.powi(3))).sqrt();
                let (a, b) = (0.4 * s, 1.2 * s);
                GridMeasure::from_cdf(Grid::line(-r, r, self.cells)?, move |x| {
                    let half = |t: f64| ((t - a) / (b - a)).clamp(0.0, 1.0);
                    0.5 * (1.0 - half(-x)) + 0.5 * half(x)
                })
            }
            Start::Exponential => GridMeasure::from_cdf(Grid::line(-2.0 * r, 3.0 * r, self.cells)?, |x| {
                if x < -1.0 { 0.0 } else { 1.0 - (-(x + 1.0)).exp() }
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodySpec {
    Ball { radius: f64, dim: usize },
    /// `{x : xᵀ A⁻¹ x ≤ 1}`.
    Ellipsoid { shape: Vec<Vec<f64>> },
    /// `{x : a_k · x ≤ 1}`.
    Polytope { normals: Vec<Vec<f64>> },
    Interval { lo: f64, hi: f64 },
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Ball { radius, dim } => ConvexBody::ball(*radius, *dim),
            BodySpec::Ellipsoid { shape } => ConvexBody::ellipsoid(SymMatrix::from_rows(shape)?),
            BodySpec::Polytope { normals } => ConvexBody::polytope(normals.clone()),
            BodySpec::Interval { lo, hi } => ConvexBody::interval(*lo, *hi),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub bodies: Vec<BodySpec>,
    pub lambda: Vec<f64>,
    #[serde(default = "geometry_tol")]
    pub tol: f64,
}

fn geometry_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteParams {
    pub preset: String,
}
