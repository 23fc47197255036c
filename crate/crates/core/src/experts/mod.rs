//! Trusted online baselines and the offline optimum.
//!
//! Every expert emits its actions together with the per-step *revealed* cost
//! `cost_t^π = Σ_{τ∈D_t} f(x^π_τ, y_τ) + d(x^π_t, x^π_{t-p:t-1})`, which is
//! what the robustification step charges against.

mod hitmin;
mod opt;
mod robd;

pub use hitmin::run_hitmin;
pub use opt::{cost_gradient, solve_opt};
pub use robd::{run_irobd, run_robd, run_robd_with_contexts, RobdParams};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::soco::{
    eval_cost, Action, Context, CostModel, DelaySchedule, History, ProblemInstance,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertTrace {
    pub actions: Vec<Action>,
    pub per_step_revealed_cost: Vec<f64>,
}

impl ExpertTrace {
    /// Attaches revealed per-step costs to an action sequence.
    pub fn from_actions(
        instance: &ProblemInstance,
        model: &CostModel,
        schedule: &DelaySchedule,
        actions: Vec<Action>,
    ) -> Result<Self> {
        let traj = eval_cost(instance, model, &actions)?;
        let hist = History::new(instance.initial_actions(), &actions);
        let p = model.p();
        let per_step_revealed_cost = (1..=instance.horizon())
            .map(|t| {
                let revealed: f64 = schedule
                    .revealed_at(t)
                    .iter()
                    .map(|&tau| traj.per_step_hitting[tau - 1])
                    .sum();
                revealed + model.switching.cost(&actions[t - 1], &hist.lags(t, p))
            })
            .collect();
        Ok(Self {
            actions,
            per_step_revealed_cost,
        })
    }

    pub fn total(&self) -> f64 {
        self.per_step_revealed_cost.iter().sum()
    }

    /// CSV with columns `t, x1..xn, revealed_cost_t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.actions.first().map_or(0, |a| a.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("revealed_cost_t".into());
        w.write_record(&header)?;
        for (i, (a, c)) in self
            .actions
            .iter()
            .zip(&self.per_step_revealed_cost)
            .enumerate()
        {
            let mut row = vec![(i + 1).to_string()];
            row.extend(a.iter().map(|v| format!("{v:?}")));
            row.push(format!("{c:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Which trusted expert RCL anchors to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpertKind {
    HitMin,
    Robd(RobdParams),
    IRobd(RobdParams),
    /// ROBD fed with externally predicted contexts (for delayed feedback).
    RobdPredicted {
        params: RobdParams,
        contexts: Vec<Context>,
    },
}

impl ExpertKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExpertKind::HitMin => "hitmin",
            ExpertKind::Robd(_) => "robd",
            ExpertKind::IRobd(_) => "irobd",
            ExpertKind::RobdPredicted { .. } => "robd-predicted",
        }
    }

    pub fn run(
        &self,
        instance: &ProblemInstance,
        model: &CostModel,
        schedule: &DelaySchedule,
    ) -> Result<ExpertTrace> {
        match self {
            ExpertKind::HitMin => run_hitmin(instance, model, schedule),
            ExpertKind::Robd(p) => run_robd(instance, model, schedule, *p),
            ExpertKind::IRobd(p) => run_irobd(instance, model, schedule, *p),
            ExpertKind::RobdPredicted { params, contexts } => {
                run_robd_with_contexts(instance, model, schedule, *params, contexts)
            }
        }
    }
}

/// Latest revealed context index `≤ t` under `schedule`, if any.
pub(crate) fn latest_revealed(reveal_time: &[Option<usize>], t: usize) -> Option<usize> {
    (1..=t)
        .rev()
        .find(|&tau| matches!(reveal_time[tau - 1], Some(at) if at <= t))
}
