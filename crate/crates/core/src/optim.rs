//! Box-constrained BFGS with central finite-difference gradients.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub grad_tol: f64,
    /// Coordinates are clamped to `[-bound, bound]`.
    pub bound: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 200, fd_step: 1e-5, grad_tol: 1e-7, bound: 20.0 }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn clamp(x: &DVector<f64>, b: f64) -> DVector<f64> {
    x.map(|v| v.clamp(-b, b))
}

fn gradient(f: &impl Fn(&[f64]) -> f64, x: &DVector<f64>, opts: &BfgsOptions) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = opts.fd_step * x[j].abs().max(1.0);
        let orig = x[j];
        xp[j] = orig + h;
        let fp = f(xp.as_slice());
        xp[j] = orig - h;
        let fm = f(xp.as_slice());
        xp[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
        if !g[j].is_finite() {
            g[j] = 0.0;
        }
    }
    g
}

/// Maximizes `f` from `x0`. Non-finite values are treated as rejections in the
/// line search.
pub fn maximize(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> BfgsResult {
    let n = x0.len();
    let mut x = clamp(&DVector::from_column_slice(x0), opts.bound);
    let mut fx = f(x.as_slice());
    let mut trace = vec![fx];
    if n == 0 {
        return BfgsResult { x: vec![], value: fx, iterations: 0, converged: true, trace };
    }
    let mut g = gradient(&f, &x, opts);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut stalls = 0;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        if g.amax() <= opts.grad_tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                h = DMatrix::identity(n, n);
            }
            let p = &h * &g;
            let slope = g.dot(&p);
            if !(slope > 0.0) {
                continue;
            }
            let mut t = 1.0;
            for _ in 0..50 {
                let trial = clamp(&(&x + &p * t), opts.bound);
                let ft = f(trial.as_slice());
                let gain = g.dot(&(&trial - &x));
                if ft.is_finite() && ft >= fx + 1e-4 * gain.min(t * slope) && ft >= fx {
                    accepted = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((xn, fnew)) = accepted else {
            converged = true;
            break;
        };
        let gn = gradient(&f, &xn, opts);
        let s = &xn - &x;
        // Curvature pair for the minimization of −f.
        let y = &g - &gn;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let a = &eye - &s * y.transpose() * rho;
            h = &a * &h * a.transpose() + &s * s.transpose() * rho;
        }
        let improvement = fnew - fx;
        x = xn;
        g = gn;
        fx = fnew;
        trace.push(fx);
        if improvement <= 1e-13 * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    BfgsResult { x: x.as_slice().to_vec(), value: fx, iterations, converged, trace }
}
