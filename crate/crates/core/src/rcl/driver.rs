use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ledger::{RclContext, RobustLedger, StepConstraint};
use super::projection::project;
use super::{RclConfig, StepDecision};
use crate::error::Result;
use crate::experts::{ExpertKind, ExpertTrace};
use crate::soco::{eval_cost, Action, ActionSpace, Context, CostModel, DelaySchedule, ProblemInstance, Trajectory};

/// What an advisor may see at step `t`: the contexts revealed at `t`.
/// Anything older it must remember itself.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub t: usize,
    pub revealed: Vec<(usize, &'a Context)>,
    pub space: &'a ActionSpace,
}

/// Source of (untrusted) per-step advice.
pub trait Advisor {
    fn advise(&mut self, obs: &Observation<'_>) -> Action;
}

/// Always advises the origin, clipped to the box.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroAdvisor;

impl Advisor for ZeroAdvisor {
    fn advise(&mut self, obs: &Observation<'_>) -> Action {
        obs.space.clip(&DVector::zeros(obs.space.dim()))
    }
}

/// Uniform samples from the action box.
#[derive(Debug, Clone)]
pub struct UniformRandomAdvisor {
    rng: ChaCha8Rng,
}

impl UniformRandomAdvisor {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Advisor for UniformRandomAdvisor {
    fn advise(&mut self, obs: &Observation<'_>) -> Action {
        let (lo, hi) = (obs.space.lower(), obs.space.upper());
        DVector::from_fn(lo.len(), |i, _| {
            if hi[i] > lo[i] {
                self.rng.random_range(lo[i]..=hi[i])
            } else {
                lo[i]
            }
        })
    }
}

/// Replays a fixed action sequence, e.g. a clairvoyant oracle in tests.
#[derive(Debug, Clone)]
pub struct FixedAdvisor {
    actions: Vec<Action>,
}

impl FixedAdvisor {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }
}

impl Advisor for FixedAdvisor {
    fn advise(&mut self, obs: &Observation<'_>) -> Action {
        self.actions[obs.t - 1].clone()
    }
}

/// Advises exactly what the expert does.
pub type ExpertAdvisor = FixedAdvisor;

impl From<&ExpertTrace> for FixedAdvisor {
    fn from(trace: &ExpertTrace) -> Self {
        Self::new(trace.actions.clone())
    }
}

/// Result of one robustified episode.
#[derive(Debug, Clone)]
pub struct RclOutcome {
    pub trajectory: Trajectory,
    pub decisions: Vec<StepDecision>,
    pub advice: Vec<Action>,
    pub expert: ExpertTrace,
}

/// Step-by-step driver for one episode.
#[derive(Debug, Clone)]
pub struct RclEpisode<'a> {
    ctx: RclContext<'a>,
    ledger: RobustLedger,
}

impl<'a> RclEpisode<'a> {
    pub fn new(ctx: RclContext<'a>) -> Result<Self> {
        ctx.check()?;
        Ok(Self {
            ctx,
            ledger: RobustLedger::new(),
        })
    }

    pub fn context(&self) -> &RclContext<'a> {
        &self.ctx
    }

    pub fn ledger(&self) -> &RobustLedger {
        &self.ledger
    }

    /// Next step index (1-based).
    pub fn t(&self) -> usize {
        self.ledger.steps() + 1
    }

    pub fn is_done(&self) -> bool {
        self.ledger.steps() == self.ctx.instance.horizon()
    }

    pub fn observation(&self) -> Observation<'a> {
        let t = self.t();
        let inst = self.ctx.instance;
        Observation {
            t,
            revealed: self
                .ctx
                .schedule
                .revealed_at(t)
                .iter()
                .map(|&tau| (tau, inst.context(tau)))
                .collect(),
            space: &self.ctx.model.space,
        }
    }

    /// Constraint for the upcoming step.
    pub fn constraint(&self) -> StepConstraint<'a> {
        self.ledger.constraint(&self.ctx)
    }

    /// Robustifies `advice` and commits the resulting action.
    pub fn step(&mut self, advice: &Action) -> Result<StepDecision> {
        let c = self.constraint();
        let d = project(advice, &c, &self.ctx.model.space)?;
        self.ledger.commit(&self.ctx, d.action.clone());
        Ok(d)
    }

    pub fn finish(self) -> Result<Trajectory> {
        eval_cost(self.ctx.instance, self.ctx.model, self.ledger.actions())
    }
}

/// Runs RCL with the given expert and advisor.
pub fn run_rcl(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
    config: RclConfig,
    expert: &ExpertKind,
    advisor: &mut dyn Advisor,
) -> Result<RclOutcome> {
    let trace = expert.run(instance, model, schedule)?;
    run_rcl_with_trace(instance, model, schedule, config, trace, advisor)
}

/// As [`run_rcl`] with a precomputed expert trace.
pub fn run_rcl_with_trace(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
    config: RclConfig,
    expert: ExpertTrace,
    advisor: &mut dyn Advisor,
) -> Result<RclOutcome> {
    let ctx = RclContext {
        instance,
        model,
        schedule,
        config,
        expert: &expert,
    };
    let mut episode = RclEpisode::new(ctx)?;
    let mut decisions = Vec::with_capacity(instance.horizon());
    let mut advice = Vec::with_capacity(instance.horizon());
    while !episode.is_done() {
        let a = advisor.advise(&episode.observation());
        decisions.push(episode.step(&a)?);
        advice.push(a);
    }
    let trajectory = episode.finish()?;
    Ok(RclOutcome {
        trajectory,
        decisions,
        advice,
        expert,
    })
}
