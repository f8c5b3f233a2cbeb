use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridMeasure};

/// Extended-real function on a grid; `None` marks `+∞`, so `e^{−f}` vanishes there.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFunctionFile {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
    values: Vec<Option<f64>>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!("{} values for {} cells", values.len(), grid.len())));
        }
        if values.iter().flatten().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Invalid("potential values must be real or +inf".into()));
        }
        let values: Vec<Option<f64>> = values.into_iter().map(|v| v.filter(|x| x.is_finite())).collect();
        let f = Self { grid, values };
        let z = f.integral_exp();
        if !z.is_finite() {
            return Err(Error::Invalid("e^{-f} is not integrable on the grid".into()));
        }
        if z <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(f)
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Option<f64>) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.center(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// `Σ e^{−f}·vol`.
    pub fn integral_exp(&self) -> f64 {
        self.values.iter().flatten().map(|v| (-v).exp()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn barycenter(&self) -> Result<DVector<f64>> {
        let d = self.grid.dim();
        let mut mass = 0.0;
        let mut moment = DVector::zeros(d);
        for (k, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                let w = (-v).exp();
                mass += w;
                moment += DVector::from_vec(self.grid.center(k)) * w;
            }
        }
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(moment / mass)
    }

    /// The probability measure with density proportional to `e^{−f}`.
    pub fn to_measure(&self) -> Result<GridMeasure> {
        let masses = self.values.iter().map(|v| v.map_or(0.0, |x| (-x).exp())).collect();
        GridMeasure::from_masses(self.grid.clone(), masses)
    }

    /// `x ↦ f(x − v)`.
    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        Ok(Self { grid: self.grid.translated(v)?, values: self.values.clone() })
    }

    pub fn to_json(&self) -> String {
        let file = GridFunctionFile {
            lo: self.grid.lo().to_vec(),
            hi: self.grid.hi().to_vec(),
            cells: self.grid.cells().to_vec(),
            values: self.values.clone(),
        };
        serde_json::to_string(&file).expect("grid function serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: GridFunctionFile =
            serde_json::from_str(s).map_err(|e| Error::Invalid(format!("grid function file: {e}")))?;
        Self::new(Grid::new(file.lo, file.hi, file.cells)?, file.values)
    }
}

type Analytic = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Analytic(Analytic),
    Sampled(GridFunction),
}

/// A potential given either as a closure (refinable) or as fixed grid values.
#[derive(Clone)]
pub struct Potential {
    grid: Grid,
    source: Source,
    label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("grid", &self.grid)
            .field("analytic", &matches!(self.source, Source::Analytic(_)))
            .finish()
    }
}

/// Integrals of `e^{−f}` and `x e^{−f}` with error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub mass: f64,
    pub moment: Vec<f64>,
    pub error: f64,
    pub moment_error: f64,
    /// Cells per axis of the finest grid used.
    pub cells: usize,
}

impl Quadrature {
    pub fn barycenter(&self) -> Vec<f64> {
        self.moment.iter().map(|m| m / self.mass).collect()
    }
}

impl Potential {
    pub fn new(grid: Grid, f: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static) -> Self {
        Self { grid, source: Source::Analytic(Arc::new(f)), label: String::new() }
    }

    pub fn from_grid_function(g: GridFunction) -> Self {
        Self { grid: g.grid().clone(), source: Source::Sampled(g), label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sample(&self) -> Result<GridFunction> {
        match &self.source {
            Source::Analytic(f) => GridFunction::from_fn(self.grid.clone(), |x| f(x)),
            Source::Sampled(g) => Ok(g.clone()),
        }
    }

    /// `x ↦ f(x − v)` on the translated grid.
    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        let grid = self.grid.translated(v)?;
        let source = match &self.source {
            Source::Analytic(f) => {
                let f = f.clone();
                let v = v.to_vec();
                Source::Analytic(Arc::new(move |x: &[f64]| {
                    let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - b).collect();
                    f(&y)
                }))
            }
            Source::Sampled(g) => Source::Sampled(g.translated(v)?),
        };
        Ok(Self { grid, source, label: self.label.clone() })
    }

    /// Midpoint rule with Richardson extrapolation over successive grid
    /// halvings, until two extrapolants agree to `rel_tol`. Fixed grid values
    /// get a single midpoint sum with an undefined (NaN) error.
    pub fn integrate(&self, rel_tol: f64) -> Result<Quadrature> {
        let f = match &self.source {
            Source::Sampled(g) => {
                let mass = g.integral_exp();
                let bar = g.barycenter()?;
                return Ok(Quadrature {
                    mass,
                    moment: bar.iter().map(|b| b * mass).collect(),
                    error: f64::NAN,
                    moment_error: f64::NAN,
                    cells: self.grid.cells()[0],
                });
            }
            Source::Analytic(f) => f,
        };
        let max_levels = if self.grid.dim() == 1 { 7 } else { 4 };
        let sums = |grid: &Grid| -> Vec<f64> {
            let d = grid.dim();
            let mut acc = vec![0.0; d + 1];
            for k in 0..grid.len() {
                let x = grid.center(k);
                if let Some(v) = f(&x) {
                    let w = (-v).exp();
                    acc[0] += w;
                    for a in 0..d {
                        acc[a + 1] += w * x[a];
                    }
                }
            }
            let vol = grid.cell_volume();
            acc.iter().map(|s| s * vol).collect()
        };
        let mut grid = self.grid.clone();
        let mut coarse = sums(&grid);
        let mut prev: Option<Vec<f64>> = None;
        let mut last = coarse.clone();
        let mut err = vec![f64::INFINITY; coarse.len()];
        for _ in 0..max_levels {
            grid = grid.refined();
            let fine = sums(&grid);
            let rich: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| (4.0 * a - b) / 3.0).collect();
            if let Some(p) = &prev {
                err = rich.iter().zip(p).map(|(a, b)| (a - b).abs()).collect();
                let mass = rich[0].abs();
                let done = err[0] <= rel_tol * mass
                    && err[1..].iter().zip(&rich[1..]).all(|(e, r)| *e <= rel_tol * r.abs().max(mass));
                last = rich.clone();
                if done {
                    break;
                }
            } else {
                last = rich.clone();
            }
            prev = Some(rich);
            coarse = fine;
        }
        if !(last[0] > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Quadrature {
            mass: last[0],
            moment: last[1..].to_vec(),
            error: if err[0].is_finite() { err[0] } else { 0.0 },
            moment_error: err[1..].iter().copied().filter(|e| e.is_finite()).fold(0.0, f64::max),
            cells: grid.cells()[0],
        })
    }
}

/// Random potentials satisfying the constraint for the barycenter form with
/// weights `lambda` in dimension one: quadratics `a_i x²/2` whose curvatures
/// keep the constraint (`a_1 a_2 ≥ 1` for two functions, `a_i ≥ 1` beyond)
/// plus nonnegative perturbations and support truncations.
pub fn random_feasible_potentials(lambda: &[f64], cells: usize, seed: u64) -> Result<Vec<Potential>> {
    crate::linalg::check_simplex(lambda)?;
    let n = lambda.len();
    if n < 2 {
        return Err(Error::Invalid("need at least two functions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curv: Vec<f64> = if n == 2 {
        let a = rng.gen_range(-1.0f64..1.0).exp();
        let slack = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0f64..0.5).exp() };
        vec![a, slack / a]
    } else {
        (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0f64..0.7).exp() }).collect()
    };
    curv.iter()
        .map(|&a| {
            let half = 12.0 / a.sqrt();
            let grid = Grid::line(-half, half, cells)?;
            let h = 2.0 * half / cells as f64;
            // Truncation points on cell edges keep the midpoint rule second order.
            let snap = |x: f64| -half + ((x + half) / h).round() * h;
            let kind = rng.gen_range(0..7);
            let beta = rng.gen_range(0.0..0.5);
            let alpha = rng.gen_range(0.0..1.0);
            let x0 = rng.gen_range(-1.0..1.0);
            let omega = rng.gen_range(0.5..3.0);
            let left = snap(-rng.gen_range(0.5..3.0) / a.sqrt());
            let right = snap(rng.gen_range(0.5..3.0) / a.sqrt());
            let label = format!("a={a:.4} kind={kind}");
            let f = move |x: &[f64]| -> Option<f64> {
                let t = x[0];
                let base = 0.5 * a * t * t;
                let truncated = t < left || t > right;
                match kind {
                    0 => Some(base),
                    1 => Some(base + beta),
                    2 => Some(base + alpha * (t - x0).max(0.0).powi(2)),
                    3 => Some(base + alpha * (t - x0).abs()),
                    4 => Some(base + alpha * (1.0 - (omega * t).cos())),
                    5 => (!truncated).then_some(base),
                    _ => (!truncated).then_some(base + alpha * (t - x0).max(0.0).powi(2)),
                }
            };
            Ok(Potential::new(grid, f).with_label(label))
        })
        .collect()
}
