//! Problem representation, cost evaluation, delay semantics and metrics.

mod cost;
mod delay;
pub mod io;
mod instance;
mod memory;
mod metrics;
mod space;

pub use cost::{ConvexEvaluator, HittingCost, HittingKind};
pub use delay::{validate_delay, DelaySchedule, DelayViolation, ViolationKind};
pub use instance::{Action, Context, History, ProblemInstance};
pub use memory::{MemoryMap, SwitchingMemory};
pub use metrics::{metrics, ratios, Metrics};
pub use space::ActionSpace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hitting cost, switching memory and the feasible box.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub hitting: HittingCost,
    pub switching: SwitchingMemory,
    pub space: ActionSpace,
}

impl CostModel {
    pub fn new(hitting: HittingCost, switching: SwitchingMemory, space: ActionSpace) -> Self {
        Self {
            hitting,
            switching,
            space,
        }
    }

    pub fn p(&self) -> usize {
        self.switching.p()
    }

    /// `α = 1 + Σ Lᵢ`.
    pub fn alpha(&self) -> f64 {
        self.switching.alpha()
    }

    pub fn beta_h(&self) -> f64 {
        self.hitting.beta_h()
    }

    /// Checks that `instance` can be scored under this model.
    pub fn check(&self, instance: &ProblemInstance) -> Result<()> {
        if instance.memory() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "initial actions (memory length p)",
                index: 0,
                expected: self.p(),
                found: instance.memory(),
            });
        }
        if instance.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                what: "action dimension",
                index: 0,
                expected: self.space.dim(),
                found: instance.dim(),
            });
        }
        if self.hitting.is_quadratic() && instance.context_dim() != instance.dim() {
            return Err(Error::DimensionMismatch {
                what: "context dimension for tracking cost",
                index: 1,
                expected: instance.dim(),
                found: instance.context_dim(),
            });
        }
        Ok(())
    }
}

/// Realised actions with their per-step costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub actions: Vec<Action>,
    pub per_step_hitting: Vec<f64>,
    pub per_step_switching: Vec<f64>,
    pub total: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// Scores `actions` on `instance`: `Σ f(x_t, y_t) + ½‖x_t − δ(x_{t-p:t-1})‖²`.
pub fn eval_cost(
    instance: &ProblemInstance,
    model: &CostModel,
    actions: &[Action],
) -> Result<Trajectory> {
    model.check(instance)?;
    if actions.len() != instance.horizon() {
        return Err(Error::DimensionMismatch {
            what: "action sequence length",
            index: 0,
            expected: instance.horizon(),
            found: actions.len(),
        });
    }
    if let Some((i, a)) = actions
        .iter()
        .enumerate()
        .find(|(_, a)| a.len() != instance.dim())
    {
        return Err(Error::DimensionMismatch {
            what: "action",
            index: i + 1,
            expected: instance.dim(),
            found: a.len(),
        });
    }
    let hist = History::new(instance.initial_actions(), actions);
    let p = model.p();
    let mut per_step_hitting = Vec::with_capacity(actions.len());
    let mut per_step_switching = Vec::with_capacity(actions.len());
    for (i, x) in actions.iter().enumerate() {
        let t = i + 1;
        per_step_hitting.push(model.hitting.value(x, instance.context(t)));
        per_step_switching.push(model.switching.cost(x, &hist.lags(t, p)));
    }
    let total = per_step_hitting.iter().sum::<f64>() + per_step_switching.iter().sum::<f64>();
    Ok(Trajectory {
        actions: actions.to_vec(),
        per_step_hitting,
        per_step_switching,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_vec(vec![v])
    }

    fn unit_model(p: usize) -> CostModel {
        let switching = if p == 1 {
            SwitchingMemory::identity()
        } else {
            SwitchingMemory::multi_linear(vec![DMatrix::zeros(1, 1); p]).unwrap()
        };
        CostModel::new(
            HittingCost::quadratic_tracking(1, 1.0).unwrap(),
            switching,
            ActionSpace::uniform(1, -10.0, 10.0).unwrap(),
        )
    }

    #[test]
    fn all_zero_costs_nothing() {
        let inst = ProblemInstance::new(vec![scalar(0.0)], vec![scalar(0.0)]).unwrap();
        let tr = eval_cost(&inst, &unit_model(1), &[scalar(0.0)]).unwrap();
        assert_eq!(tr.total, 0.0);
    }

    #[test]
    fn hand_evaluated_switching() {
        let inst = ProblemInstance::new(vec![scalar(1.0)], vec![scalar(0.0)]).unwrap();
        let tr = eval_cost(&inst, &unit_model(1), &[scalar(1.0)]).unwrap();
        assert_eq!(tr.per_step_hitting, vec![0.0]);
        assert_eq!(tr.per_step_switching, vec![0.5]);
    }

    #[test]
    fn constant_zero_memory_with_two_slots() {
        // f ≡ 0 is emulated by putting the context on the action.
        let inst = ProblemInstance::new(vec![scalar(2.0)], vec![scalar(5.0), scalar(5.0)]).unwrap();
        let tr = eval_cost(&inst, &unit_model(2), &[scalar(2.0)]).unwrap();
        assert_eq!(tr.per_step_hitting, vec![0.0]);
        assert_eq!(tr.per_step_switching, vec![2.0]);
    }

    #[test]
    fn dimension_error_names_index() {
        let inst =
            ProblemInstance::new(vec![scalar(0.0), scalar(0.0)], vec![scalar(0.0)]).unwrap();
        let bad = vec![scalar(0.0), DVector::from_vec(vec![0.0, 1.0])];
        match eval_cost(&inst, &unit_model(1), &bad) {
            Err(Error::DimensionMismatch { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn memory_length_must_match() {
        let inst = ProblemInstance::new(vec![scalar(0.0)], vec![scalar(0.0)]).unwrap();
        assert!(eval_cost(&inst, &unit_model(2), &[scalar(0.0)]).is_err());
    }
}
