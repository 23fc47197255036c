//! Battery state-of-charge tracking as a SOCO problem.
//!
//! With dynamics `x_{t+1} = A x_t + B a_t − w_t` and `B = I`, tracking a
//! nominal level `x̄` with action smoothing reduces to contexts
//! `y_t = x̄ − Aᵗx₁ + Σ_{i=1}^t A^{t−i} w_i` and the objective
//! `Σ (1/b)‖a_t − y_t‖² + ‖a_t − A a_{t−1}‖²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::DemandWindow;
use crate::error::{Error, Result};
use crate::soco::{ActionSpace, CostModel, HittingCost, ProblemInstance, SwitchingMemory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvConfig {
    /// Self-degradation `A`.
    pub a: DMatrix<f64>,
    /// Charging efficiency `B`; only the identity is supported.
    pub b_eff: DMatrix<f64>,
    /// Weight `b` of the tracking term.
    pub b: f64,
    pub x_bar: DVector<f64>,
    pub x1: DVector<f64>,
    /// Coordinatewise action bounds.
    pub bounds: (f64, f64),
}

impl EvConfig {
    /// `A = B = I`, `b = 10`, `x₁ = x̄ = 0`, actions in `[0, 25]`.
    pub fn standard(dim: usize) -> Self {
        Self {
            a: DMatrix::identity(dim, dim),
            b_eff: DMatrix::identity(dim, dim),
            b: 10.0,
            x_bar: DVector::zeros(dim),
            x1: DVector::zeros(dim),
            bounds: (0.0, 25.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(self.b > 0.0) {
            return Err(Error::InvalidInput(format!("EV weight b must be positive, got {}", self.b)));
        }
        if !self.a.is_square() || self.b_eff.shape() != (n, n) || self.x_bar.len() != n || self.x1.len() != n {
            return Err(Error::InvalidInput("EV matrices and vectors must share one dimension".into()));
        }
        if self.b_eff != DMatrix::identity(n, n) {
            return Err(Error::Unsupported("EV reduction requires an identity efficiency matrix B".into()));
        }
        Ok(())
    }

    /// Hitting `(1/(2b))‖a−y‖²` with switching `½‖a − A a_{t−1}‖²`: exactly
    /// half the battery objective, so costs map back with a factor 2.
    pub fn model(&self) -> Result<CostModel> {
        self.validate()?;
        let n = self.dim();
        Ok(CostModel::new(
            HittingCost::quadratic_tracking(n, 2.0 * self.b)?,
            SwitchingMemory::linear(self.a.clone())?,
            ActionSpace::uniform(n, self.bounds.0, self.bounds.1)?,
        ))
    }
}

/// Factor from SOCO cost to battery objective.
pub const EV_COST_SCALE: f64 = 2.0;

/// `y_{1:T}` for demands `w_{1:T}`.
pub fn ev_contexts(demands: &[DVector<f64>], cfg: &EvConfig) -> Result<Vec<DVector<f64>>> {
    cfg.validate()?;
    let n = cfg.dim();
    let mut a_pow_x1 = cfg.x1.clone();
    let mut acc = DVector::zeros(n);
    let mut out = Vec::with_capacity(demands.len());
    for (i, w) in demands.iter().enumerate() {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                what: "demand vector",
                index: i + 1,
                expected: n,
                found: w.len(),
            });
        }
        a_pow_x1 = &cfg.a * a_pow_x1;
        acc = &cfg.a * acc + w;
        out.push(&cfg.x_bar - &a_pow_x1 + &acc);
    }
    Ok(out)
}

/// Reduced instance and model for one demand window; the window's initial
/// value becomes the previous action `a_0`.
pub fn reduce_ev(window: &DemandWindow, cfg: &EvConfig) -> Result<(ProblemInstance, CostModel)> {
    let model = cfg.model()?;
    let contexts = ev_contexts(&window.demands, cfg)?;
    let a0 = model.space.clip(&window.initial);
    Ok((ProblemInstance::new(contexts, vec![a0])?, model))
}
