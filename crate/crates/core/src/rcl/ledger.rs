use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::reservation::{g_weights, reservation_g, reservation_h};
use super::RclConfig;
use crate::error::{Error, Result};
use crate::experts::ExpertTrace;
use crate::soco::{Action, Context, CostModel, DelaySchedule, History, ProblemInstance};

/// Everything fixed for the duration of one episode.
#[derive(Debug, Clone, Copy)]
pub struct RclContext<'a> {
    pub instance: &'a ProblemInstance,
    pub model: &'a CostModel,
    pub schedule: &'a DelaySchedule,
    pub config: RclConfig,
    pub expert: &'a ExpertTrace,
}

impl RclContext<'_> {
    pub fn check(&self) -> Result<()> {
        self.model.check(self.instance)?;
        let horizon = self.instance.horizon();
        if self.schedule.horizon() != horizon || self.expert.actions.len() != horizon {
            return Err(Error::DimensionMismatch {
                what: "episode horizon (schedule / expert trace)",
                index: 0,
                expected: horizon,
                found: self.schedule.horizon().min(self.expert.actions.len()),
            });
        }
        Ok(())
    }

    fn h_coef(&self) -> f64 {
        0.5 * self.model.beta_h() * (1.0 + 1.0 / self.config.lambda0)
    }

    fn expert_history(&self) -> History<'_> {
        History::new(self.instance.initial_actions(), &self.expert.actions)
    }
}

/// Running sums of both sides of the robustness constraint.
#[derive(Debug, Clone, Default)]
pub struct RobustLedger {
    pub lhs_revealed_hitting: f64,
    pub lhs_switching: f64,
    pub lhs_reservation_h: f64,
    pub rhs_revealed_hitting: f64,
    pub rhs_switching: f64,
    pending_h: BTreeMap<usize, f64>,
    actions: Vec<Action>,
}

/// The constraint at step `t` as a function of the candidate action only:
/// `LHS(x) = known_lhs + φ(x) + ½‖x − δ_t‖² + g_coef‖x − x^π_t‖²`, with
/// `φ = f(·, y_t)` when `y_t` is already revealed and `φ = H(·, x^π_t)`
/// otherwise.
#[derive(Debug, Clone)]
pub struct StepConstraint<'a> {
    pub t: usize,
    pub model: &'a CostModel,
    pub known_lhs: f64,
    pub rhs: f64,
    /// `y_t` if it is revealed at `t`.
    pub context: Option<Context>,
    pub delta_t: Action,
    pub x_pi: Action,
    pub h_coef: f64,
    pub g_coef: f64,
    /// `cost_t^π`.
    pub expert_cost: f64,
    /// `K` for the episode's configuration.
    pub k: f64,
}

impl StepConstraint<'_> {
    /// `LHS − RHS` at `x`.
    pub fn value(&self, x: &Action) -> f64 {
        self.known_lhs + self.current(x) - self.rhs
    }

    /// `RHS − LHS` at `x`; nonnegative means feasible.
    pub fn slack(&self, x: &Action) -> f64 {
        -self.value(x)
    }

    /// Feasibility with a float-drift floor of `1e-9·(1 + |RHS|)`.
    pub fn is_feasible(&self, x: &Action) -> bool {
        self.slack(x) >= self.floor()
    }

    pub fn floor(&self) -> f64 {
        -1e-9 * (1.0 + self.rhs.abs())
    }

    pub(crate) fn current(&self, x: &Action) -> f64 {
        let dpi = (x - &self.x_pi).norm_squared();
        let phi = match &self.context {
            Some(y) => self.model.hitting.value(x, y),
            None => self.h_coef * dpi,
        };
        phi + 0.5 * (x - &self.delta_t).norm_squared() + self.g_coef * dpi
    }

    pub fn gradient(&self, x: &Action) -> DVector<f64> {
        let dpi = x - &self.x_pi;
        let mut g = (x - &self.delta_t) + &dpi * (2.0 * self.g_coef);
        match &self.context {
            Some(y) => g += self.model.hitting.gradient(x, y),
            None => g += dpi * (2.0 * self.h_coef),
        }
        g
    }

    pub fn hessian(&self, x: &Action) -> DMatrix<f64> {
        let n = x.len();
        let base = DMatrix::identity(n, n) * (1.0 + 2.0 * self.g_coef);
        match &self.context {
            Some(y) => base + self.model.hitting.hessian(x, y),
            None => base + DMatrix::identity(n, n) * (2.0 * self.h_coef),
        }
    }

    /// Whether `t` is revealed at `t` (so the true hitting cost applies).
    pub fn revealed_now(&self) -> bool {
        self.context.is_some()
    }
}

impl RobustLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of committed steps.
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }

    /// Unrevealed indices with their current `H`.
    pub fn pending(&self) -> &BTreeMap<usize, f64> {
        &self.pending_h
    }

    /// The constraint for the next step `t = steps() + 1`.
    pub fn constraint<'a>(&self, ctx: &RclContext<'a>) -> StepConstraint<'a> {
        let t = self.actions.len() + 1;
        let model = ctx.model;
        let inst = ctx.instance;
        let p = model.p();
        let lambda0 = ctx.config.lambda0;
        let d_t = ctx.schedule.revealed_at(t);
        let own = History::new(inst.initial_actions(), &self.actions);
        let exp = ctx.expert_history();

        let mut known = self.lhs_revealed_hitting + self.lhs_switching;
        let mut rhs_hit = self.rhs_revealed_hitting;
        for &tau in d_t {
            if tau < t {
                known += model.hitting.value(&self.actions[tau - 1], inst.context(tau));
            }
            rhs_hit += model.hitting.value(&ctx.expert.actions[tau - 1], inst.context(tau));
        }
        known += self
            .pending_h
            .iter()
            .filter(|(tau, _)| !d_t.contains(tau))
            .map(|(_, h)| h)
            .sum::<f64>();

        // G minus its x_t part: weights for x_{t-i}, i = 1..p-1.
        let w = g_weights(model.switching.lipschitz(), lambda0);
        for (i, wi) in w.iter().enumerate().skip(1) {
            let s = t as isize - i as isize;
            if s >= 1 {
                known += wi * (own.at(s) - exp.at(s)).norm_squared();
            }
        }

        let x_pi = ctx.expert.actions[t - 1].clone();
        let rhs_sw = self.rhs_switching + model.switching.cost(&x_pi, &exp.lags(t, p));
        let expert_cost = ctx.expert.per_step_revealed_cost[t - 1];
        StepConstraint {
            t,
            model,
            known_lhs: known,
            rhs: (1.0 + ctx.config.lambda) * (rhs_hit + rhs_sw),
            context: d_t.contains(&t).then(|| inst.context(t).clone()),
            delta_t: model.switching.delta(&own.lags(t, p)),
            x_pi,
            h_coef: ctx.h_coef(),
            g_coef: w[0],
            expert_cost,
            k: ctx.config.k(model.beta_h(), model.alpha()),
        }
    }

    /// Appends `x` as the action of the next step.
    pub fn commit(&mut self, ctx: &RclContext<'_>, x: Action) {
        let t = self.actions.len() + 1;
        let model = ctx.model;
        let inst = ctx.instance;
        let p = model.p();
        for &tau in ctx.schedule.revealed_at(t) {
            let x_tau = if tau == t { &x } else { &self.actions[tau - 1] };
            self.lhs_revealed_hitting += model.hitting.value(x_tau, inst.context(tau));
            self.rhs_revealed_hitting +=
                model.hitting.value(&ctx.expert.actions[tau - 1], inst.context(tau));
            self.pending_h.remove(&tau);
        }
        let x_pi = &ctx.expert.actions[t - 1];
        if !ctx.schedule.revealed_at(t).contains(&t) {
            let h = reservation_h(&x, x_pi, model.beta_h(), ctx.config.lambda0);
            self.pending_h.insert(t, h);
        }
        self.lhs_reservation_h = self.pending_h.values().sum();
        {
            let own = History::new(inst.initial_actions(), &self.actions);
            self.lhs_switching += model.switching.cost(&x, &own.lags(t, p));
        }
        let exp = ctx.expert_history();
        self.rhs_switching += model.switching.cost(x_pi, &exp.lags(t, p));
        self.actions.push(x);
    }

    /// `G` at the window ending at the last committed step.
    pub fn reservation_g(&self, ctx: &RclContext<'_>) -> f64 {
        let t = self.actions.len() as isize;
        let p = ctx.model.p();
        let own = History::new(ctx.instance.initial_actions(), &self.actions);
        let exp = ctx.expert_history();
        let xw: Vec<&Action> = (0..p).map(|i| own.at(t - i as isize)).collect();
        let pw: Vec<&Action> = (0..p).map(|i| exp.at(t - i as isize)).collect();
        reservation_g(&xw, &pw, ctx.model.switching.lipschitz(), ctx.config.lambda0)
    }

    /// `(LHS, RHS)` after the last committed step.
    pub fn sides(&self, ctx: &RclContext<'_>) -> (f64, f64) {
        let lhs = self.lhs_revealed_hitting
            + self.lhs_switching
            + self.lhs_reservation_h
            + self.reservation_g(ctx);
        let rhs = (1.0 + ctx.config.lambda) * (self.rhs_revealed_hitting + self.rhs_switching);
        (lhs, rhs)
    }
}

/// `(LHS, RHS)` of the constraint at step `t` for `actions[..t]`, evaluated
/// term by term with no incremental state.
pub fn recompute_sides(ctx: &RclContext<'_>, actions: &[Action], t: usize) -> (f64, f64) {
    let model = ctx.model;
    let inst = ctx.instance;
    let p = model.p();
    let (a_t, b_t) = ctx.schedule.revealed_sets(t);
    let own = History::new(inst.initial_actions(), &actions[..t]);
    let exp = ctx.expert_history();
    let beta = model.beta_h();
    let l0 = ctx.config.lambda0;

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for &tau in &a_t {
        lhs += model.hitting.value(&actions[tau - 1], inst.context(tau));
        rhs += model.hitting.value(&ctx.expert.actions[tau - 1], inst.context(tau));
    }
    for tau in 1..=t {
        lhs += model.switching.cost(own.at(tau as isize), &own.lags(tau, p));
        rhs += model
            .switching
            .cost(exp.at(tau as isize), &exp.lags(tau, p));
    }
    for &tau in &b_t {
        lhs += reservation_h(&actions[tau - 1], &ctx.expert.actions[tau - 1], beta, l0);
    }
    let xw: Vec<&Action> = (0..p).map(|i| own.at(t as isize - i as isize)).collect();
    let pw: Vec<&Action> = (0..p).map(|i| exp.at(t as isize - i as isize)).collect();
    lhs += reservation_g(&xw, &pw, model.switching.lipschitz(), l0);
    (lhs, (1.0 + ctx.config.lambda) * rhs)
}
