use nalgebra::{DMatrix, DVector};

use super::ledger::StepConstraint;
use super::StepDecision;
use crate::error::{Error, Result};
use crate::linalg::{box_qp, BandedSpd};
use crate::optim::{projected_gradient, PgOptions};
use crate::soco::{Action, ActionSpace, HittingKind};

const MU_CAP: f64 = 1_152_921_504_606_846_976.0; // 2^60
const MAX_BISECTIONS: usize = 200;

/// `x′ = θx^π + (1−θ)x̃` with `θ = [1 − √(K·cost_t^π)/‖x̃ − x^π‖]⁺`: the
/// closest point to the advice inside the ball `‖x − x^π‖² ≤ K·cost_t^π`.
pub fn sufficient_projection(advice: &Action, x_pi: &Action, expert_cost: f64, k: f64) -> Action {
    let dist = (advice - x_pi).norm();
    if dist == 0.0 {
        return advice.clone();
    }
    let theta = (1.0 - (k * expert_cost).max(0.0).sqrt() / dist).max(0.0);
    x_pi * theta + advice * (1.0 - theta)
}

/// `argmin_{x ∈ box} ½‖x − x̃‖² + μ·LHS(x)`.
fn inner(advice: &Action, mu: f64, c: &StepConstraint<'_>, space: &ActionSpace) -> Result<Action> {
    let n = advice.len();
    let quad = match (&c.context, c.model.hitting.kind()) {
        (None, _) => Some((None, 2.0 * (c.g_coef + c.h_coef))),
        (Some(y), HittingKind::Quadratic { weight, b }) => {
            Some((Some((weight * (2.0 / b), y)), 2.0 * c.g_coef))
        }
        (Some(_), HittingKind::Custom(_)) => None,
    };
    let scale = 1.0 / (1.0 + mu);
    if let Some((hit, kappa)) = quad {
        // (I + μ(H_f + (1+κ)I)) x = x̃ + μ(H_f y + δ_t + κ x^π)
        let mut rhs = advice + (&c.delta_t + &c.x_pi * kappa) * mu;
        let mut m = DMatrix::identity(n, n) * (1.0 + mu * (1.0 + kappa));
        let mut diagonal = true;
        if let Some((hf, y)) = &hit {
            rhs += (hf * *y) * mu;
            m += hf * mu;
            diagonal = is_diagonal(hf);
        }
        let x = if diagonal {
            DVector::from_fn(n, |i, _| rhs[i] / m[(i, i)])
        } else {
            (m.clone() * scale)
                .cholesky()
                .ok_or_else(|| Error::InvalidInput("projection system not positive definite".into()))?
                .solve(&(&rhs * scale))
        };
        if diagonal || space.contains(&x, 0.0) {
            return Ok(space.clip(&x));
        }
        let ms = m * scale;
        let rs = rhs * scale;
        let dense = BandedSpd::from_dense(&ms);
        if let Some(z) = box_qp(&dense, &rs, space.lower(), space.upper(), &space.clip(&x), 50)? {
            return Ok(z);
        }
        let res = projected_gradient(
            |z| {
                let mz = &ms * z;
                (0.5 * z.dot(&mz) - rs.dot(z), mz - &rs)
            },
            |z| space.clip(z),
            x,
            PgOptions {
                max_iter: 100_000,
                tol: 1e-13,
            },
        )?;
        return Ok(res.x);
    }
    let res = projected_gradient(
        |z| {
            let v = (0.5 * (z - advice).norm_squared() + mu * c.current(z)) * scale;
            let g = ((z - advice) + c.gradient(z) * mu) * scale;
            (v, g)
        },
        |z| space.clip(z),
        space.clip(advice),
        PgOptions {
            max_iter: 100_000,
            tol: 1e-13,
        },
    )?;
    Ok(res.x)
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, v)| k % (m.nrows() + 1) == 0 || *v == 0.0)
}

/// Closest point to `advice` that satisfies the step constraint and lies in
/// the action box.
///
/// Feasible in-box advice (boundary included) is returned untouched.
/// Otherwise the box is kept as a hard constraint and the multiplier `μ` of
/// the robustness constraint is found by bisection on the monotone map
/// `μ ↦ slack(x(μ))`; the returned point is the feasible end of the final
/// bracket.
pub fn project(advice: &Action, c: &StepConstraint<'_>, space: &ActionSpace) -> Result<StepDecision> {
    let decision = |x: Action, projected: bool, slack: f64, mu: f64| StepDecision {
        displacement: (&x - advice).norm(),
        action: x,
        projected,
        slack,
        dual_mu: mu,
    };
    let in_box = space.contains(advice, 0.0);
    let s_adv = c.slack(advice);
    if in_box && s_adv >= c.floor() {
        return Ok(decision(advice.clone(), false, s_adv, 0.0));
    }
    if !in_box {
        let clipped = space.clip(advice);
        let s = c.slack(&clipped);
        if s >= c.floor() {
            return Ok(decision(clipped, true, s, 0.0));
        }
    }
    let s_pi = c.slack(&c.x_pi);
    if s_pi < c.floor() {
        return Err(Error::ExpertInfeasible { t: c.t, slack: s_pi });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut x_hi = inner(advice, hi, c, space)?;
    let mut s_hi = c.slack(&x_hi);
    while s_hi < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > MU_CAP {
            if s_hi >= c.floor() {
                break;
            }
            return Err(Error::NonBracketing { t: c.t });
        }
        x_hi = inner(advice, hi, c, space)?;
        s_hi = c.slack(&x_hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if s_hi == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let x_mid = inner(advice, mid, c, space)?;
        let s_mid = c.slack(&x_mid);
        if s_mid >= 0.0 {
            hi = mid;
            x_hi = x_mid;
            s_hi = s_mid;
        } else {
            lo = mid;
        }
    }
    Ok(decision(x_hi, true, s_hi, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::{run_hitmin, ExpertTrace};
    use crate::rcl::{RclConfig, RclContext, RobustLedger};
    use crate::soco::{CostModel, DelaySchedule, HittingCost, ProblemInstance, SwitchingMemory};

    fn s(v: f64) -> Action {
        DVector::from_vec(vec![v])
    }

    #[test]
    fn sufficient_projection_examples() {
        let xp = s(0.0);
        // inside the ball
        assert_eq!(sufficient_projection(&s(0.5), &xp, 1.0, 1.0), s(0.5));
        // ‖x̃−x^π‖ = 2, K·cost = 1 → midpoint
        assert!((sufficient_projection(&s(2.0), &xp, 1.0, 1.0)[0] - 1.0).abs() < 1e-15);
        // zero budget → expert
        assert_eq!(sufficient_projection(&s(2.0), &xp, 0.0, 1.0), xp);
        assert_eq!(sufficient_projection(&xp, &xp, 0.0, 1.0), xp);
    }

    struct Fixture {
        inst: ProblemInstance,
        model: CostModel,
        sched: DelaySchedule,
        expert: ExpertTrace,
    }

    fn fixture() -> Fixture {
        let inst = ProblemInstance::new(vec![s(1.0)], vec![s(0.0)]).unwrap();
        let model = CostModel::new(
            HittingCost::quadratic_tracking(1, 1.0).unwrap(),
            SwitchingMemory::identity(),
            ActionSpace::uniform(1, -10.0, 10.0).unwrap(),
        );
        let sched = DelaySchedule::no_delay(1);
        let expert = run_hitmin(&inst, &model, &sched).unwrap();
        Fixture { inst, model, sched, expert }
    }

    #[test]
    fn feasible_and_expert_advice_pass_through() {
        let f = fixture();
        let ctx = RclContext {
            instance: &f.inst,
            model: &f.model,
            schedule: &f.sched,
            config: RclConfig::new(1.0).unwrap(),
            expert: &f.expert,
        };
        let c = RobustLedger::new().constraint(&ctx);
        let d = project(&f.expert.actions[0], &c, &f.model.space).unwrap();
        assert!(!d.projected && d.dual_mu == 0.0);
        assert_eq!(d.action, f.expert.actions[0]);
        let d = project(&s(0.95), &c, &f.model.space).unwrap();
        assert!(!d.projected);
        assert_eq!(d.action, s(0.95));
    }

    #[test]
    fn tight_scalar_case_lands_on_surface() {
        let f = fixture();
        let ctx = RclContext {
            instance: &f.inst,
            model: &f.model,
            schedule: &f.sched,
            config: RclConfig::new(0.5).unwrap(),
            expert: &f.expert,
        };
        let c = RobustLedger::new().constraint(&ctx);
        let advice = s(-3.0);
        assert!(c.slack(&advice) < 0.0);
        let d = project(&advice, &c, &f.model.space).unwrap();
        assert!(d.projected && d.dual_mu > 0.0);
        assert!(d.slack.abs() < 1e-8);
        let xs = sufficient_projection(&advice, &c.x_pi, c.expert_cost, c.k);
        assert!(c.slack(&xs) >= 0.0);
        assert!(d.displacement <= (&xs - &advice).norm() + 1e-9);
    }

    #[test]
    fn box_stays_hard() {
        let f = fixture();
        let space = ActionSpace::uniform(1, 0.9, 10.0).unwrap();
        let model = CostModel::new(f.model.hitting.clone(), f.model.switching.clone(), space.clone());
        let ctx = RclContext {
            instance: &f.inst,
            model: &model,
            schedule: &f.sched,
            config: RclConfig::new(0.1).unwrap(),
            expert: &f.expert,
        };
        let c = RobustLedger::new().constraint(&ctx);
        let d = project(&s(-5.0), &c, &space).unwrap();
        assert!(space.contains(&d.action, 0.0));
        assert!(d.slack >= 0.0);
    }

    #[test]
    fn nondiagonal_weight_matches_kkt() {
        let inst = ProblemInstance::new(
            vec![DVector::from_vec(vec![0.5, -0.5])],
            vec![DVector::from_vec(vec![0.0, 0.0])],
        )
        .unwrap();
        let model = CostModel::new(
            HittingCost::quadratic(DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]), 1.0).unwrap(),
            SwitchingMemory::identity(),
            ActionSpace::uniform(2, -10.0, 10.0).unwrap(),
        );
        let sched = DelaySchedule::no_delay(1);
        let expert = run_hitmin(&inst, &model, &sched).unwrap();
        let ctx = RclContext {
            instance: &inst,
            model: &model,
            schedule: &sched,
            config: RclConfig::new(0.3).unwrap(),
            expert: &expert,
        };
        let c = RobustLedger::new().constraint(&ctx);
        let advice = DVector::from_vec(vec![-2.0, 3.0]);
        let d = project(&advice, &c, &model.space).unwrap();
        // Stationarity of ½‖x − x̃‖² + μ·g(x).
        let r = (&d.action - &advice) + c.gradient(&d.action) * d.dual_mu;
        assert!(r.norm() < 1e-8);
        assert!(d.slack.abs() < 1e-8);
    }
}
