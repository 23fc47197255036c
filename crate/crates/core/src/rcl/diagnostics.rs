use serde::{Deserialize, Serialize};

use super::RclConfig;
use crate::error::Result;
use crate::experts::ExpertTrace;
use crate::soco::{eval_cost, Action, CostModel, ProblemInstance};

/// The two upper bounds on the cost of robustified advice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bound {
    /// `(1+λ)·cost(x^π)`.
    pub bound_expert: f64,
    /// `(√cost(x̃) + √(((β_h+α²)/2)·Δ(λ)))²`.
    pub bound_ml: f64,
    /// `Δ(λ) = Σ_t [‖x̃_t − x^π_t‖² − (2(√(1+λ)−1)²/(β_h+α²))·cost_t^π]⁺`.
    pub delta_lambda: f64,
}

impl Theorem1Bound {
    pub fn min(&self) -> f64 {
        self.bound_expert.min(self.bound_ml)
    }
}

pub fn theorem1_bound(
    instance: &ProblemInstance,
    model: &CostModel,
    config: &RclConfig,
    expert: &ExpertTrace,
    advice: &[Action],
) -> Result<Theorem1Bound> {
    let spread = model.beta_h() + model.alpha().powi(2);
    let coef = 2.0 * ((1.0 + config.lambda).sqrt() - 1.0).powi(2) / spread;
    let delta_lambda: f64 = advice
        .iter()
        .zip(&expert.actions)
        .zip(&expert.per_step_revealed_cost)
        .map(|((a, xp), c)| ((a - xp).norm_squared() - coef * c).max(0.0))
        .sum();
    let cost_ml = eval_cost(instance, model, advice)?.total;
    let cost_pi = eval_cost(instance, model, &expert.actions)?.total;
    Ok(Theorem1Bound {
        bound_expert: (1.0 + config.lambda) * cost_pi,
        bound_ml: (cost_ml.sqrt() + (0.5 * spread * delta_lambda).sqrt()).powi(2),
        delta_lambda,
    })
}
