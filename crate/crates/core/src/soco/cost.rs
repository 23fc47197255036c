use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::space::ActionSpace;
use super::{Action, Context};
use crate::error::{Error, Result};
use crate::linalg::sym_eig_range;
use crate::optim::{projected_gradient, PgOptions};

/// User-supplied convex hitting cost `f(x, y)`.
pub trait ConvexEvaluator: Send + Sync + fmt::Debug {
    fn value(&self, x: &Action, y: &Context) -> f64;

    fn gradient(&self, x: &Action, y: &Context) -> DVector<f64>;

    /// Defaults to central differences of [`ConvexEvaluator::gradient`].
    fn hessian(&self, x: &Action, y: &Context) -> DMatrix<f64> {
        let n = x.len();
        let h = 1e-6;
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (self.gradient(&xp, y) - self.gradient(&xm, y)) / (2.0 * h);
            out.set_column(j, &col);
        }
        (&out + out.transpose()) * 0.5
    }
}

#[derive(Debug, Clone)]
pub enum HittingKind {
    /// `f(x, y) = (1/b)(x − y)ᵀ Q (x − y)`.
    Quadratic { weight: DMatrix<f64>, b: f64 },
    Custom(Arc<dyn ConvexEvaluator>),
}

/// Hitting cost with its strong-convexity and smoothness constants.
#[derive(Debug, Clone)]
pub struct HittingCost {
    kind: HittingKind,
    alpha_h: f64,
    beta_h: f64,
}

impl HittingCost {
    /// `(1/b)‖x − y‖²`, with `α_h = β_h = 2/b`.
    pub fn quadratic_tracking(dim: usize, b: f64) -> Result<Self> {
        Self::quadratic(DMatrix::identity(dim, dim), b)
    }

    /// `(1/b)(x − y)ᵀQ(x − y)` for symmetric positive-definite `Q`.
    pub fn quadratic(weight: DMatrix<f64>, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidInput(format!("scale b must be positive, got {b}")));
        }
        if !weight.is_square() {
            return Err(Error::InvalidInput("hitting weight must be square".into()));
        }
        if (&weight - weight.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidInput("hitting weight must be symmetric".into()));
        }
        let (lo, hi) = sym_eig_range(&weight);
        if !(lo > 0.0) {
            return Err(Error::InvalidInput("hitting weight must be positive definite".into()));
        }
        Ok(Self {
            kind: HittingKind::Quadratic { weight, b },
            alpha_h: 2.0 * lo / b,
            beta_h: 2.0 * hi / b,
        })
    }

    /// Custom evaluator; the constants are trusted inputs (see [`Self::spot_check`]).
    pub fn custom(eval: Arc<dyn ConvexEvaluator>, alpha_h: f64, beta_h: f64) -> Result<Self> {
        if !(alpha_h > 0.0 && beta_h >= alpha_h) {
            return Err(Error::InvalidInput(format!(
                "need beta_h >= alpha_h > 0, got alpha_h={alpha_h}, beta_h={beta_h}"
            )));
        }
        Ok(Self {
            kind: HittingKind::Custom(eval),
            alpha_h,
            beta_h,
        })
    }

    pub fn kind(&self) -> &HittingKind {
        &self.kind
    }

    pub fn alpha_h(&self) -> f64 {
        self.alpha_h
    }

    pub fn beta_h(&self) -> f64 {
        self.beta_h
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, HittingKind::Quadratic { .. })
    }

    pub fn value(&self, x: &Action, y: &Context) -> f64 {
        match &self.kind {
            HittingKind::Quadratic { weight, b } => {
                let r = x - y;
                r.dot(&(weight * &r)) / b
            }
            HittingKind::Custom(e) => e.value(x, y),
        }
    }

    pub fn gradient(&self, x: &Action, y: &Context) -> DVector<f64> {
        match &self.kind {
            HittingKind::Quadratic { weight, b } => (weight * (x - y)) * (2.0 / b),
            HittingKind::Custom(e) => e.gradient(x, y),
        }
    }

    pub fn hessian(&self, x: &Action, y: &Context) -> DMatrix<f64> {
        match &self.kind {
            HittingKind::Quadratic { weight, b } => weight * (2.0 / b),
            HittingKind::Custom(e) => e.hessian(x, y),
        }
    }

    /// `argmin_{x ∈ space} f(x, y)`.
    pub fn minimize_over(&self, y: &Context, space: &ActionSpace) -> Result<Action> {
        if let HittingKind::Quadratic { weight, .. } = &self.kind {
            if weight.is_square() && is_diagonal(weight) && y.len() == space.dim() {
                return Ok(space.clip(y));
            }
        }
        let res = projected_gradient(
            |x| (self.value(x, y), self.gradient(x, y)),
            |x| space.clip(x),
            space.center(),
            PgOptions {
                max_iter: 100_000,
                tol: 1e-10,
            },
        )?;
        Ok(res.x)
    }

    /// Randomised secant-slope probe of `α_h ≤ ⟨∇f(x)−∇f(z), x−z⟩/‖x−z‖² ≤ β_h`
    /// and of nonnegativity. Returns the worst violation found (0 when none).
    pub fn spot_check<R: Rng>(
        &self,
        space: &ActionSpace,
        contexts: &[Context],
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let y = &contexts[rng.random_range(0..contexts.len())];
            let x = sample_in(space, rng);
            let z = sample_in(space, rng);
            let d = &x - &z;
            let dd = d.norm_squared();
            if dd < 1e-18 {
                continue;
            }
            let slope = (self.gradient(&x, y) - self.gradient(&z, y)).dot(&d) / dd;
            worst = worst
                .max(self.alpha_h - slope)
                .max(slope - self.beta_h)
                .max(-self.value(&x, y));
        }
        worst
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

pub(crate) fn sample_in<R: Rng>(space: &ActionSpace, rng: &mut R) -> Action {
    DVector::from_iterator(
        space.dim(),
        space
            .lower()
            .iter()
            .zip(space.upper().iter())
            .map(|(lo, hi)| if hi > lo { rng.random_range(*lo..*hi) } else { *lo }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug)]
    struct Quartic;

    impl ConvexEvaluator for Quartic {
        // (x-y)^2 + 0.1 (x-y)^4, scalar
        fn value(&self, x: &Action, y: &Context) -> f64 {
            let r = x[0] - y[0];
            r * r + 0.1 * r.powi(4)
        }
        fn gradient(&self, x: &Action, y: &Context) -> DVector<f64> {
            let r = x[0] - y[0];
            DVector::from_vec(vec![2.0 * r + 0.4 * r.powi(3)])
        }
    }

    #[test]
    fn quadratic_tracking_constants() {
        let h = HittingCost::quadratic_tracking(3, 10.0).unwrap();
        assert_eq!(h.alpha_h(), 0.2);
        assert_eq!(h.beta_h(), 0.2);
    }

    #[test]
    fn spot_check_passes_for_true_constants() {
        let space = ActionSpace::uniform(2, -1.0, 1.0).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let h = HittingCost::quadratic(w, 4.0).unwrap();
        let ctx = vec![DVector::from_vec(vec![0.1, -0.2])];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(h.spot_check(&space, &ctx, 500, &mut rng) < 1e-9);
    }

    #[test]
    fn spot_check_flags_wrong_constants() {
        let space = ActionSpace::uniform(1, -1.0, 1.0).unwrap();
        let h = HittingCost::custom(Arc::new(Quartic), 2.0, 2.1).unwrap();
        let ctx = vec![DVector::from_vec(vec![0.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(h.spot_check(&space, &ctx, 500, &mut rng) > 0.0);
    }

    #[test]
    fn custom_minimizer_uses_projected_gradient() {
        let space = ActionSpace::uniform(1, 0.0, 1.0).unwrap();
        let h = HittingCost::custom(Arc::new(Quartic), 2.0, 3.2).unwrap();
        let x = h.minimize_over(&DVector::from_vec(vec![0.3]), &space).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-8);
        let x = h.minimize_over(&DVector::from_vec(vec![4.0]), &space).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_hessian_by_differences() {
        let h = Quartic.hessian(&DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![0.0]));
        assert!((h[(0, 0)] - (2.0 + 1.2)).abs() < 1e-6);
    }
}
