use super::{latest_revealed, ExpertTrace};
use crate::error::Result;
use crate::soco::{CostModel, DelaySchedule, ProblemInstance};

/// Greedy hitting-cost minimiser on the most recent revealed context; holds
/// the previous action while nothing covering `t` has arrived.
pub fn run_hitmin(
    instance: &ProblemInstance,
    model: &CostModel,
    schedule: &DelaySchedule,
) -> Result<ExpertTrace> {
    model.check(instance)?;
    let reveal = schedule.reveal_times();
    let mut actions = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        let x = match latest_revealed(&reveal, t) {
            Some(tau) => model
                .hitting
                .minimize_over(instance.context(tau), &model.space)?,
            None => actions
                .last()
                .cloned()
                .unwrap_or_else(|| instance.initial_actions().last().unwrap().clone()),
        };
        actions.push(x);
    }
    ExpertTrace::from_actions(instance, model, schedule, actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soco::{ActionSpace, HittingCost, SwitchingMemory};
    use nalgebra::DVector;

    fn model() -> CostModel {
        CostModel::new(
            HittingCost::quadratic_tracking(1, 1.0).unwrap(),
            SwitchingMemory::identity(),
            ActionSpace::uniform(1, 0.0, 1.0).unwrap(),
        )
    }

    fn s(v: f64) -> DVector<f64> {
        DVector::from_vec(vec![v])
    }

    #[test]
    fn tracks_revealed_context_and_clips() {
        let inst = ProblemInstance::new(vec![s(0.3), s(5.0)], vec![s(0.0)]).unwrap();
        let tr = run_hitmin(&inst, &model(), &DelaySchedule::no_delay(2)).unwrap();
        assert_eq!(tr.actions, vec![s(0.3), s(1.0)]);
    }

    #[test]
    fn holds_until_something_is_revealed() {
        let inst = ProblemInstance::new(vec![s(0.3), s(0.6), s(0.9)], vec![s(0.1)]).unwrap();
        let sched = DelaySchedule::identical(3, 3);
        let tr = run_hitmin(&inst, &model(), &sched).unwrap();
        assert_eq!(tr.actions[0], s(0.1));
        assert_eq!(tr.actions[1], s(0.1));
        // the clamped tail reveals everything at T
        assert_eq!(tr.actions[2], s(0.9));
    }
}
