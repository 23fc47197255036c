//! Small first-order solver shared by the experts and the offline optimum.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PgOptions {
    pub max_iter: usize,
    /// Stop once `‖x − P(x − ∇f(x))‖ < tol`.
    pub tol: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PgResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Projected gradient descent with Armijo backtracking.
///
/// `objective` returns the value and gradient at a point; `project` maps onto
/// the feasible set. Fails with [`Error::NonConvergence`] when the stationarity
/// residual is still above `tol` after `max_iter` steps.
pub fn projected_gradient<F, P>(
    mut objective: F,
    project: P,
    x0: DVector<f64>,
    opts: PgOptions,
) -> Result<PgResult>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    const SIGMA: f64 = 1e-4;
    let mut x = project(&x0);
    let (mut fx, mut g) = objective(&x);
    let mut step: f64 = 1.0;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        residual = (&x - project(&(&x - &g))).norm();
        if residual < opts.tol {
            return Ok(PgResult {
                x,
                iterations: it,
                residual,
            });
        }
        step = (step * 2.0).min(1e6);
        loop {
            let cand = project(&(&x - &g * step));
            let (fc, gc) = objective(&cand);
            let d = &cand - &x;
            let decrease = g.dot(&d);
            // Near the optimum the decrease drops below the rounding of `f`;
            // the curvature along `d` (from gradients) still certifies it.
            let curvature_ok = fc.is_finite() && (&gc - &g).dot(&d) <= d.norm_squared() / step;
            if fc <= fx + SIGMA * decrease || curvature_ok || step < 1e-20 {
                x = cand;
                fx = fc;
                g = gc;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
