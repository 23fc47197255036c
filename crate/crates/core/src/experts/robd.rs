use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{latest_revealed, ExpertTrace};
use crate::error::{Error, Result};
use crate::optim::{projected_gradient, PgOptions};
use crate::soco::{
    Action, Context, CostModel, DelaySchedule, History, HittingKind, ProblemInstance,
};

/// Regularisation weights of ROBD:
/// `x_t = argmin f(x, y_t) + λ₁·d(x, x_{t-p:t-1}) + (λ₂/2)‖x − v_t‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobdParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl RobdParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ROBD weights must be finite and nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Pure greedy (reduces to the hitting-cost minimiser).
    pub fn greedy() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
        }
    }

    /// Competitive-ratio-minimising weights for an `m`-strongly convex
    /// hitting cost and memory constant `α`: `λ₂ = 0` and `λ₁ = 1/CR` with
    /// `CR = ½(1 + (α²−1)/m + √((1 + (α²−1)/m)² + 4/m))`.
    pub fn optimal(alpha_h: f64, alpha: f64) -> Self {
        Self {
            lambda1: 1.0 / Self::competitive_ratio(alpha_h, alpha),
            lambda2: 0.0,
        }
    }

    pub fn optimal_for(model: &CostModel) -> Self {
        Self::optimal(model.hitting.alpha_h(), model.alpha())
    }

    pub fn competitive_ratio(alpha_h: f64, alpha: f64) -> f64 {
        let m = alpha_h;
        let a = 1.0 + (alpha * alpha - 1.0) / m;
        0.5 * (a + (a * a + 4.0 / m).sqrt())
    }
}

/// One ROBD update against context `y` given `lags = [x_{t-1}, …, x_{t-p}]`,
/// clipped to the action box.
pub(crate) fn robd_step(
    model: &CostModel,
    params: RobdParams,
    y: &Context,
    lags: &[&Action],
) -> Result<Action> {
    let v = model.hitting.minimize_over(y, &model.space)?;
    let RobdParams { lambda1, lambda2 } = params;
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return Ok(v);
    }
    let target = model.switching.delta(lags);
    match model.hitting.kind() {
        HittingKind::Quadratic { weight, b } => {
            let n = v.len();
            let m = weight * (2.0 / b) + DMatrix::identity(n, n) * (lambda1 + lambda2);
            let rhs = weight * y * (2.0 / b) + &target * lambda1 + &v * lambda2;
            let x = m
                .cholesky()
                .ok_or_else(|| Error::InvalidInput("ROBD system not positive definite".into()))?
                .solve(&rhs);
            Ok(model.space.clip(&x))
        }
        HittingKind::Custom(_) => {
            let res = projected_gradient(
                |x| {
                    let dx = x - &target;
                    let dv = x - &v;
                    let val = model.hitting.value(x, y)
                        + 0.5 * lambda1 * dx.norm_squared()
                        + 0.5 * lambda2 * dv.norm_squared();
                    let g = model.hitting.gradient(x, y) + dx * lambda1 + dv * lambda2;
                    (val, g)
                },
                |x| model.space.clip(x),
                v.clone(),
                PgOptions {
                    max_iter: 100_000,
                    tol: 1e-9,
                },
            )?;
            Ok(res.x)
        }
    }
}

fn rollout(
    instance: &ProblemInstance,
    model: &CostModel,
    params: RobdParams,
    mut context_at: impl FnMut(usize) -> Context,
) -> Result<Vec<Action>> {
    let p = model.p();
    let mut actions: Vec<Action> = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        let y = context_at(t);
        let x = {
            let hist = History::new(instance.initial_actions(), &actions);
            robd_step(model, params, &y, &hist.lags(t, p))?
        };
        actions.push(x);
    }
    Ok(actions)
}

/// ROBD; needs `y_t` at step `t`, so every `D_t` must contain `t`.
pub fn run_robd(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
    params: RobdParams,
) -> Result<ExpertTrace> {
    model.check(instance)?;
    if !schedule.is_immediate() {
        return Err(Error::NeedsCurrentContext { q: schedule.q });
    }
    let actions = rollout(instance, model, params, |t| instance.context(t).clone())?;
    ExpertTrace::from_actions(instance, model, schedule, actions)
}

/// ROBD driven by substitute contexts (e.g. forecasts under delay). The
/// revealed costs are still charged against the true contexts.
pub fn run_robd_with_contexts(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
    params: RobdParams,
    contexts: &[Context],
) -> Result<ExpertTrace> {
    model.check(instance)?;
    if contexts.len() != instance.horizon() {
        return Err(Error::DimensionMismatch {
            what: "substitute contexts",
            index: 0,
            expected: instance.horizon(),
            found: contexts.len(),
        });
    }
    let actions = rollout(instance, model, params, |t| contexts[t - 1].clone())?;
    ExpertTrace::from_actions(instance, model, schedule, actions)
}

/// Delayed-feedback ROBD under the identical-delay reading: each unrevealed
/// context is replaced by the most recent revealed one (or by a prior when
/// nothing has arrived yet) and ROBD steps against that estimate chain.
///
/// The prior is the last initial action when contexts live in action space,
/// otherwise the zero context.
pub fn run_irobd(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
    params: RobdParams,
) -> Result<ExpertTrace> {
    model.check(instance)?;
    let reveal = schedule.reveal_times();
    let prior = if instance.context_dim() == instance.dim() {
        instance.initial_actions().last().unwrap().clone()
    } else {
        DVector::zeros(instance.context_dim())
    };
    let actions = rollout(instance, model, params, |t| {
        match latest_revealed(&reveal, t) {
            Some(tau) => instance.context(tau).clone(),
            None => prior.clone(),
        }
    })?;
    ExpertTrace::from_actions(instance, model, schedule, actions)
}
