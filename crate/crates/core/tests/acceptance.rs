//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rcl_core::experts::{cost_gradient, solve_opt};
use rcl_core::harness::{
    contaminate_windows, reduce_ev, run_suite, sliding_windows, split_thirds, AdvisorChoice, Algorithm, Dataset,
    DemandWindow, EvConfig, ExpertChoice, SuiteItem, SuiteOptions,
};
use rcl_core::predictor::{
    aware_rollout, grad_aware, implicit_grads, kkt_blocks, loss_aware, train, Architecture, AwareEpisode, Predictor,
    Sample, TrainHyper, TrainMode,
};
use rcl_core::rcl::{
    corollary1_lambda, project, reservation_g, sufficient_projection, theorem1_bound, Advisor, FixedAdvisor,
    RclContext, RclEpisode, StepConstraint, UniformRandomAdvisor, ZeroAdvisor,
};
use rcl_core::soco::{
    eval_cost, validate_delay, Action, ActionSpace, CostModel, DelaySchedule, HittingCost, ProblemInstance,
    SwitchingMemory, ViolationKind,
};
use rcl_core::{ExpertKind, RclConfig, RobdParams};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

fn random_contraction(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s: f64 = m.clone().svd(false, false).singular_values.max();
    m * (rng.random_range(0.3..1.0) / s.max(1e-12))
}

fn uniform_vec(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

// ---------------------------------------------------------------------------
// The shared robustness suite (criteria 1, 2, 3, 6c, 8).

const SUITE_SIZE: usize = 1000;
const SUITE_LAMBDAS: [f64; 5] = [0.1, 0.6, 1.0, 3.0, 5.0];

struct SuiteCase {
    instance: ProblemInstance,
    model: CostModel,
    schedule: DelaySchedule,
}

fn suite_case(i: usize) -> SuiteCase {
    let mut rng = ChaCha8Rng::seed_from_u64(1_000 + i as u64);
    let n = [1, 2, 4][i % 3];
    let p = [1, 2][(i / 3) % 2];
    let q = [0, 1, 3][(i / 6) % 3];
    let horizon = 24;
    let b = [1.0, 2.0, 10.0][(i / 18) % 3];
    let hitting = if n > 1 && i.is_multiple_of(2) {
        HittingCost::quadratic(random_spd(n, &mut rng), b).unwrap()
    } else {
        HittingCost::quadratic_tracking(n, b).unwrap()
    };
    let switching = match (p, i % 4) {
        (1, 0) => SwitchingMemory::identity(),
        (1, _) => SwitchingMemory::linear(random_contraction(n, &mut rng)).unwrap(),
        _ => SwitchingMemory::multi_linear(vec![random_contraction(n, &mut rng), random_contraction(n, &mut rng) * 0.5])
            .unwrap(),
    };
    let space = ActionSpace::uniform(n, 0.0, 1.0).unwrap();
    let model = CostModel::new(hitting, switching, space);
    // Context style rotates between smooth, noisy and alternating.
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let contexts: Vec<DVector<f64>> = (1..=horizon)
        .map(|t| match i % 3 {
            0 => DVector::from_fn(n, |k, _| 0.5 + 0.45 * ((t + k) as f64 / 4.0 + phase).sin()),
            1 => uniform_vec(n, 0.0, 1.0, &mut rng),
            _ => DVector::from_fn(n, |_, _| if t % 2 == 0 { rng.random_range(0.0..0.1) } else { rng.random_range(0.9..1.0) }),
        })
        .collect();
    let initial = (0..p).map(|_| uniform_vec(n, 0.0, 1.0, &mut rng)).collect();
    let instance = ProblemInstance::new(contexts, initial).unwrap();
    let schedule = DelaySchedule::random(horizon, q, &mut rng);
    SuiteCase {
        instance,
        model,
        schedule,
    }
}

#[derive(Default, Clone)]
struct SuiteStats {
    episodes: usize,
    worst_c1: f64,
    worst_c2: f64,
    min_c3: f64,
    worst_c6: f64,
    worst_c8: f64,
    projected_steps: usize,
    errors: Vec<String>,
}

impl SuiteStats {
    fn new() -> Self {
        Self {
            worst_c1: f64::NEG_INFINITY,
            worst_c2: f64::NEG_INFINITY,
            min_c3: f64::INFINITY,
            worst_c6: f64::NEG_INFINITY,
            worst_c8: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    fn merge(mut self, o: SuiteStats) -> Self {
        self.episodes += o.episodes;
        self.worst_c1 = self.worst_c1.max(o.worst_c1);
        self.worst_c2 = self.worst_c2.max(o.worst_c2);
        self.min_c3 = self.min_c3.min(o.min_c3);
        self.worst_c6 = self.worst_c6.max(o.worst_c6);
        self.worst_c8 = self.worst_c8.max(o.worst_c8);
        self.projected_steps += o.projected_steps;
        self.errors.extend(o.errors);
        self
    }
}

fn run_case(i: usize) -> SuiteStats {
    let mut st = SuiteStats::new();
    let case = suite_case(i);
    let (inst, model, sched) = (&case.instance, &case.model, &case.schedule);
    let mut run = || -> rcl_core::Result<()> {
        let expert = ExpertKind::IRobd(RobdParams::optimal_for(model)).run(inst, model, sched)?;
        let expert_cost = eval_cost(inst, model, &expert.actions)?.total;
        let opt = solve_opt(inst, model)?.total;
        st.worst_c6 = st.worst_c6.max((opt - expert_cost) / expert_cost);
        for &lambda in &SUITE_LAMBDAS {
            let config = RclConfig::new(lambda)?;
            for which in 0..2 {
                let mut advisor: Box<dyn Advisor> = if which == 0 {
                    Box::new(UniformRandomAdvisor::new(i as u64 * 7 + 1))
                } else {
                    Box::new(ZeroAdvisor)
                };
                let ctx = RclContext {
                    instance: inst,
                    model,
                    schedule: sched,
                    config,
                    expert: &expert,
                };
                let mut ep = RclEpisode::new(ctx)?;
                let mut advice = Vec::new();
                while !ep.is_done() {
                    let c = ep.constraint();
                    st.min_c3 = st.min_c3.min(c.slack(&c.x_pi));
                    let a = advisor.advise(&ep.observation());
                    let d = ep.step(&a)?;
                    if d.projected {
                        st.projected_steps += 1;
                        let xs = sufficient_projection(&a, &c.x_pi, c.expert_cost, c.k);
                        st.worst_c8 = st.worst_c8.max((&d.action - &a).norm() - (&xs - &a).norm());
                    }
                    advice.push(a);
                }
                let cost = ep.finish()?.total;
                st.worst_c1 = st.worst_c1.max(cost / ((1.0 + lambda) * expert_cost * (1.0 + 1e-6)));
                let bound = theorem1_bound(inst, model, &config, &expert, &advice)?;
                st.worst_c2 = st.worst_c2.max(cost - bound.min());
                let adv_cost = eval_cost(inst, model, &advice)?.total;
                st.worst_c6 = st.worst_c6.max((opt - cost) / cost).max((opt - adv_cost) / adv_cost);
                st.episodes += 1;
            }
        }
        Ok(())
    };
    if let Err(e) = run() {
        st.errors.push(format!("instance {i}: {e}"));
    }
    st
}

// ---------------------------------------------------------------------------
// Criterion 4: implicit gradients of the projection layer.

/// Below this norm both a finite difference and its analytic counterpart
/// count as zero (finite-difference noise is about 1e-10 here).
const ZERO_GRAD: f64 = 1e-7;

/// Relative error of an analytic derivative against a finite difference.
/// A derivative that is zero on both sides matches exactly.
fn grad_error(diff: f64, fd_norm: f64, analytic_norm: f64) -> f64 {
    if fd_norm < ZERO_GRAD && analytic_norm < ZERO_GRAD {
        0.0
    } else {
        diff / fd_norm.max(analytic_norm)
    }
}

fn criterion4() -> Verdict {
    let mut active = 0usize;
    let mut zero_blocks = 0usize;
    let mut inactive = 0usize;
    let mut worst = 0.0f64;
    let mut inactive_exact = true;
    let h = 1e-6;
    for seed in 0..20_000u64 {
        if active >= 200 && inactive >= 50 {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let n = 1 + (seed % 2) as usize;
        let horizon = 3;
        let hitting = if n == 2 && seed % 4 == 1 {
            HittingCost::quadratic(random_spd(2, &mut rng), rng.random_range(0.5..4.0)).unwrap()
        } else {
            HittingCost::quadratic_tracking(n, rng.random_range(0.5..4.0)).unwrap()
        };
        let model = CostModel::new(
            hitting,
            SwitchingMemory::linear(random_contraction(n, &mut rng)).unwrap(),
            ActionSpace::uniform(n, -5.0, 5.0).unwrap(),
        );
        let inst = ProblemInstance::new(
            (0..horizon).map(|_| uniform_vec(n, 0.0, 1.0, &mut rng)).collect(),
            vec![uniform_vec(n, 0.0, 1.0, &mut rng)],
        )
        .unwrap();
        let sched = DelaySchedule::no_delay(horizon);
        let expert = ExpertKind::HitMin.run(&inst, &model, &sched).unwrap();
        let config = RclConfig::new(rng.random_range(0.05..1.0)).unwrap();
        let ctx = RclContext {
            instance: &inst,
            model: &model,
            schedule: &sched,
            config,
            expert: &expert,
        };
        let mut ep = RclEpisode::new(ctx).unwrap();
        while !ep.is_done() {
            let c = ep.constraint();
            let advice = uniform_vec(n, -3.0, 3.0, &mut rng);
            let d = project(&advice, &c, &model.space).unwrap();
            let interior = d.action.iter().all(|v| v.abs() < 5.0 - 1e-6);
            if d.dual_mu > 0.0 && interior {
                let blocks = kkt_blocks(&d.action, d.dual_mu, &c).unwrap();
                if blocks.schur.abs() > 1e-6 && active < 200 {
                    let g = implicit_grads(&blocks).unwrap();
                    let mut fd = DMatrix::zeros(n, n);
                    for j in 0..n {
                        let mut ap = advice.clone();
                        let mut am = advice.clone();
                        ap[j] += h;
                        am[j] -= h;
                        let col = (project(&ap, &c, &model.space).unwrap().action
                            - project(&am, &c, &model.space).unwrap().action)
                            / (2.0 * h);
                        fd.set_column(j, &col);
                    }
                    let shift = |delta: f64| {
                        let mut cc: StepConstraint<'_> = c.clone();
                        cc.known_lhs += delta;
                        project(&advice, &cc, &model.space).unwrap().action
                    };
                    let fd_c = (shift(h) - shift(-h)) / (2.0 * h);
                    let e1 = grad_error((&g.d_x_d_advice - &fd).norm(), fd.norm(), g.d_x_d_advice.norm());
                    let e2 = grad_error((&g.d_x_d_prevcost - &fd_c).norm(), fd_c.norm(), g.d_x_d_prevcost.norm());
                    zero_blocks += (fd.norm() < ZERO_GRAD) as usize + (fd_c.norm() < ZERO_GRAD) as usize;
                    worst = worst.max(e1).max(e2);
                    active += 1;
                }
            } else if d.dual_mu == 0.0 && !d.projected && inactive < 50 {
                let g = implicit_grads(&kkt_blocks(&d.action, 0.0, &c).unwrap()).unwrap();
                inactive_exact &= g.d_x_d_advice == DMatrix::identity(n, n) && g.d_x_d_prevcost == DVector::zeros(n);
                inactive += 1;
            }
            ep.step(&advice).unwrap();
        }
    }
    verdict(
        active >= 200 && worst < 1e-4 && inactive_exact && inactive > 0,
        format!(
            "{active} active configurations ({zero_blocks} of {} Jacobian blocks exactly zero), worst relative error {worst:.2e}; \
             {inactive} inactive, exact identity/zero: {inactive_exact}",
            2 * active
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 5: end-to-end robustification-aware weight gradient.

fn pattern(ep: &AwareEpisode, space: &ActionSpace) -> Vec<u8> {
    let mut out = Vec::new();
    for (a, d) in ep.advice.iter().zip(&ep.decisions) {
        out.push(d.projected as u8);
        out.push((d.dual_mu > 0.0) as u8);
        for i in 0..a.len() {
            out.push((a[i] <= space.lower()[i]) as u8 + 2 * (a[i] >= space.upper()[i]) as u8);
            let x = d.action[i];
            out.push((x <= space.lower()[i]) as u8 + 2 * (x >= space.upper()[i]) as u8);
        }
    }
    out
}

fn criterion5() -> Verdict {
    let results: Vec<(f64, usize, usize, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
            let n = 1 + (seed % 2) as usize;
            let horizon = 2 + (seed % 3) as usize;
            let q = (seed / 3 % 2) as usize;
            let p = 1 + (seed / 6 % 2) as usize;
            let space = ActionSpace::uniform(n, -1.0, 1.0).unwrap();
            let switching = if p == 1 {
                SwitchingMemory::linear(random_contraction(n, &mut rng)).unwrap()
            } else {
                SwitchingMemory::multi_linear(vec![random_contraction(n, &mut rng), random_contraction(n, &mut rng) * 0.4])
                    .unwrap()
            };
            let model = CostModel::new(
                HittingCost::quadratic_tracking(n, rng.random_range(0.5..2.0)).unwrap(),
                switching,
                space.clone(),
            );
            let inst = ProblemInstance::new(
                (0..horizon).map(|_| uniform_vec(n, -0.6, 0.6, &mut rng)).collect(),
                (0..p).map(|_| uniform_vec(n, -0.3, 0.3, &mut rng)).collect(),
            )
            .unwrap();
            let sched = DelaySchedule::random(horizon, q, &mut rng);
            let expert = if q == 0 {
                ExpertKind::Robd(RobdParams::optimal_for(&model))
            } else {
                ExpertKind::IRobd(RobdParams::optimal_for(&model))
            };
            let sample = Sample::new(inst, sched, &model, &expert).unwrap();
            let config = RclConfig::new(rng.random_range(0.2..2.0)).unwrap();
            let mut pred = Predictor::new(Architecture::new(n, n, p, q), seed);
            let push = rng.random_range(-0.8..0.8);
            for v in pred.params.block_mut(6) {
                *v += push;
            }
            let batch = vec![sample];
            let base = aware_rollout(&pred, &batch[0], &model, config).unwrap();
            let any_active = base.decisions.iter().any(|d| d.dual_mu > 0.0);
            let base_pattern = pattern(&base, &space);
            let (_, g) = grad_aware(&pred, &batch, &model, config).unwrap();
            let h = 1e-6;
            let (mut err, mut scale, mut kept, mut skipped) = (0.0, 0.0, 0usize, 0usize);
            for k in 0..g.len() {
                let mut pp = pred.clone();
                let mut pm = pred.clone();
                pp.params.flat_mut()[k] += h;
                pm.params.flat_mut()[k] -= h;
                let ep_p = aware_rollout(&pp, &batch[0], &model, config).unwrap();
                let ep_m = aware_rollout(&pm, &batch[0], &model, config).unwrap();
                if pattern(&ep_p, &space) != base_pattern || pattern(&ep_m, &space) != base_pattern {
                    skipped += 1;
                    continue;
                }
                let fd = (ep_p.cost - ep_m.cost) / (2.0 * h);
                err += (g[k] - fd).powi(2);
                scale += fd * fd;
                kept += 1;
            }
            debug_assert!(loss_aware(&pred, &batch, &model, config).unwrap().is_finite());
            let g_norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rel = grad_error(err.sqrt(), scale.sqrt(), g_norm);
            (rel, kept, skipped, any_active && scale.sqrt() >= ZERO_GRAD)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let kept: usize = results.iter().map(|r| r.1).sum();
    let skipped: usize = results.iter().map(|r| r.2).sum();
    let active = results.iter().filter(|r| r.3).count();
    verdict(
        worst < 1e-3 && active >= 50,
        format!(
            "100 episodes ({active} with an active constraint and a nonzero gradient), worst relative error {worst:.2e}, {kept} weights compared, {skipped} skipped for active-set changes"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 6a/6b: offline optimum.

/// Brute-force cost of a scalar T=2 instance with memory weights `a`.
fn scalar_cost(x: [f64; 2], y: [f64; 2], init: &[f64], a: &[f64], b: f64) -> f64 {
    // hist holds x_{t-1}, x_{t-2}, … newest first.
    let mut hist: Vec<f64> = init.iter().rev().copied().collect();
    let mut total = 0.0;
    for t in 0..2 {
        let delta: f64 = a.iter().zip(&hist).map(|(ai, xi)| ai * xi).sum();
        total += (x[t] - y[t]).powi(2) / b + 0.5 * (x[t] - delta).powi(2);
        hist.insert(0, x[t]);
    }
    total
}

fn criterion6_grid() -> (f64, usize) {
    let cases: Vec<f64> = (0..24u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(60_000 + seed);
            let p = 1 + (seed % 2) as usize;
            let b = rng.random_range(0.5..5.0);
            let a: Vec<f64> = (0..p).map(|k| rng.random_range(0.2..1.0) / (k + 1) as f64).collect();
            let y = [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
            let init: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            let switching = if p == 1 {
                SwitchingMemory::linear(DMatrix::from_element(1, 1, a[0])).unwrap()
            } else {
                SwitchingMemory::multi_linear(a.iter().map(|v| DMatrix::from_element(1, 1, *v)).collect()).unwrap()
            };
            let model = CostModel::new(
                HittingCost::quadratic_tracking(1, b).unwrap(),
                switching,
                ActionSpace::uniform(1, 0.0, 1.0).unwrap(),
            );
            let inst = ProblemInstance::new(vec![dv(&[y[0]]), dv(&[y[1]])], init.iter().map(|v| dv(&[*v])).collect())
                .unwrap();
            let opt = solve_opt(&inst, &model).unwrap().total;
            let mut best = f64::INFINITY;
            for i in 0..=1000 {
                for j in 0..=1000 {
                    best = best.min(scalar_cost([i as f64 * 1e-3, j as f64 * 1e-3], y, &init, &a, b));
                }
            }
            // The optimum may not beat the grid by more than rounding; the grid
            // may not beat the optimum at all.
            if opt > best + 1e-12 {
                f64::INFINITY
            } else {
                best - opt
            }
        })
        .collect();
    (cases.iter().copied().fold(0.0, f64::max), cases.len())
}

fn criterion6_stationarity() -> (f64, usize) {
    let res: Vec<f64> = (0..60u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(61_000 + seed);
            let n = [1, 2, 4][(seed % 3) as usize];
            let p = 1 + (seed / 3 % 3) as usize;
            let blocks: Vec<DMatrix<f64>> = (0..p)
                .map(|k| random_contraction(n, &mut rng) * (0.8 / (k + 1) as f64))
                .collect();
            let model = CostModel::new(
                HittingCost::quadratic(random_spd(n, &mut rng), rng.random_range(0.5..10.0)).unwrap(),
                SwitchingMemory::multi_linear(blocks).unwrap(),
                ActionSpace::uniform(n, -100.0, 100.0).unwrap(),
            );
            let inst = ProblemInstance::new(
                (0..24).map(|_| uniform_vec(n, 0.0, 1.0, &mut rng)).collect(),
                (0..p).map(|_| uniform_vec(n, 0.0, 1.0, &mut rng)).collect(),
            )
            .unwrap();
            let opt = solve_opt(&inst, &model).unwrap();
            cost_gradient(&inst, &model, &opt.actions).amax()
        })
        .collect();
    (res.iter().copied().fold(0.0, f64::max), res.len())
}

// ---------------------------------------------------------------------------
// Criterion 7: large λ follows good advice verbatim.

fn criterion7() -> Verdict {
    let eps = 0.1;
    let mut worst_disp = 0.0f64;
    let mut worst_cost = 0.0f64;
    let mut min_expert_step = f64::INFINITY;
    let mut instances = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(70_000 + seed);
        let n = 1 + (seed % 2) as usize;
        let horizon = 24;
        let model = CostModel::new(
            HittingCost::quadratic_tracking(n, rng.random_range(1.0..10.0)).unwrap(),
            SwitchingMemory::identity(),
            ActionSpace::uniform(n, -0.5, 1.5).unwrap(),
        );
        let contexts = (1..=horizon)
            .map(|t| {
                if t % 2 == 1 {
                    uniform_vec(n, 0.0, 0.1, &mut rng)
                } else {
                    uniform_vec(n, 0.9, 1.0, &mut rng)
                }
            })
            .collect();
        let inst = ProblemInstance::new(contexts, vec![DVector::from_element(n, 1.0)]).unwrap();
        let sched = DelaySchedule::no_delay(horizon);
        let expert = ExpertKind::HitMin.run(&inst, &model, &sched).unwrap();
        min_expert_step = expert.per_step_revealed_cost.iter().copied().fold(min_expert_step, f64::min);
        let lambda = corollary1_lambda(model.space.diameter(), model.alpha(), model.beta_h(), eps);
        let opt = solve_opt(&inst, &model).unwrap();
        let mut advisor = FixedAdvisor::new(opt.actions.clone());
        let out = rcl_core::rcl::run_rcl_with_trace(
            &inst,
            &model,
            &sched,
            RclConfig::new(lambda).unwrap(),
            expert,
            &mut advisor,
        )
        .unwrap();
        for d in &out.decisions {
            worst_disp = worst_disp.max(d.displacement);
        }
        worst_cost = worst_cost.max((out.trajectory.total - opt.total).abs() / opt.total);
        instances += 1;
    }
    verdict(
        min_expert_step >= eps && worst_disp < 1e-9 && worst_cost < 1e-9,
        format!(
            "{instances} instances, min expert step cost {min_expert_step:.3}, max displacement {worst_disp:.1e}, max relative cost gap {worst_cost:.1e}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 9: telescoping identity of the memory reservation.

fn criterion9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(90_000);
    let mut worst = 0.0f64;
    for trial in 0..10_000 {
        let p = 1 + trial % 3;
        let n = 1 + rng.random_range(0..3);
        let lips: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..2.0)).collect();
        let lambda0 = rng.random_range(0.01..5.0);
        // xs[i] = x_{t-1-i}, ps[i] = x^π_{t-1-i} for i = 0..p-1; plus the new x^π_t.
        let xs: Vec<Action> = (0..p).map(|_| uniform_vec(n, -2.0, 2.0, &mut rng)).collect();
        let ps: Vec<Action> = (0..p).map(|_| uniform_vec(n, -2.0, 2.0, &mut rng)).collect();
        let x_pi_t = uniform_vec(n, -2.0, 2.0, &mut rng);
        let prev: Vec<&Action> = xs.iter().collect();
        let prev_pi: Vec<&Action> = ps.iter().collect();
        let mut cand: Vec<&Action> = vec![&x_pi_t];
        cand.extend(xs.iter().take(p - 1));
        let mut cand_pi: Vec<&Action> = vec![&x_pi_t];
        cand_pi.extend(ps.iter().take(p - 1));
        let lhs = reservation_g(&prev, &prev_pi, &lips, lambda0) - reservation_g(&cand, &cand_pi, &lips, lambda0);
        let alpha = 1.0 + lips.iter().sum::<f64>();
        let rhs = 0.5 * alpha * (1.0 + 1.0 / lambda0)
            * (0..p).map(|i| lips[i] * (&xs[i] - &ps[i]).norm_squared()).sum::<f64>();
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    verdict(worst <= 1e-10, format!("10000 windows, worst deviation {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// Criterion 10: qualitative trends on battery-style data.

fn demand_series(rows: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 0.08).unwrap();
    (0..rows)
        .map(|h| {
            let daily = 0.45 + 0.35 * (std::f64::consts::TAU * (h % 24) as f64 / 24.0 - 1.2).sin();
            let v: f64 = daily + rand_distr::Distribution::sample(&normal, &mut rng);
            dv(&[v.clamp(0.0, 1.0)])
        })
        .collect()
}

fn ev_dataset(name: &str, windows: &[DemandWindow], cfg: &EvConfig) -> Dataset {
    let mut model = None;
    let items = windows
        .iter()
        .map(|w| {
            let (instance, m) = reduce_ev(w, cfg).unwrap();
            model.get_or_insert(m);
            SuiteItem {
                schedule: DelaySchedule::no_delay(instance.horizon()),
                instance,
            }
        })
        .collect();
    Dataset {
        name: name.into(),
        model: model.expect("at least one window"),
        items,
    }
}

fn criterion10() -> Verdict {
    let cfg = EvConfig::standard(1);
    let windows = sliding_windows(&demand_series(480 + 24, 100), 25, 1);
    let (train_w, _valid_w, test_w) = split_thirds(&windows);
    let train_ds = ev_dataset("train", &train_w, &cfg);
    let model = train_ds.model.clone();
    let robd = RobdParams::optimal_for(&model);
    let expert = ExpertKind::Robd(robd);
    let samples: Vec<Sample> = train_ds
        .items
        .iter()
        .map(|it| Sample::new(it.instance.clone(), it.schedule.clone(), &model, &expert).unwrap())
        .collect();
    let arch = Architecture::new(1, 1, 1, 0);
    let hyper = TrainHyper {
        epochs: 140,
        batch: 50,
        lr: 1e-3,
        momentum: 0.9,
        seed: 5,
        ..TrainHyper::default()
    };
    let rcl_config = RclConfig::new(1.0).unwrap();
    let mut oblivious = Predictor::centered(arch, 5, &model.space);
    let obl_curve = train(&mut oblivious, &samples, &model, TrainMode::Oblivious, &hyper).unwrap();
    // Aware training fine-tunes the oblivious model on the post-projection cost.
    let mut aware = oblivious.clone();
    let aware_curve = train(&mut aware, &samples, &model, TrainMode::Aware { config: rcl_config }, &hyper).unwrap();
    let oblivious = Arc::new(oblivious);
    let aware = Arc::new(aware);

    let test = ev_dataset("test", &test_w, &cfg);
    let rcl = |pred: &Arc<Predictor>| Algorithm::Rcl {
        expert: ExpertChoice::Robd(robd),
        advisor: AdvisorChoice::Predictor(pred.clone()),
    };
    let opts = |lambdas: Vec<f64>| SuiteOptions {
        lambdas,
        ..SuiteOptions::default()
    };
    let clean = run_suite(
        std::slice::from_ref(&test),
        &[Algorithm::Ml(AdvisorChoice::Predictor(oblivious.clone())), Algorithm::Expert(ExpertChoice::Robd(robd)), rcl(&oblivious)],
        &opts(vec![0.6, 1.0, 5.0]),
    )
    .unwrap();
    let avg = |r: &rcl_core::harness::BenchReport, alg: &str, l: Option<f64>| r.cell(alg, l).unwrap().avg;
    let avg_06 = avg(&clean, "rcl-robd", Some(0.6));
    let avg_5 = avg(&clean, "rcl-robd", Some(5.0));
    let avg_obl_1 = avg(&clean, "rcl-robd", Some(1.0));
    let aware_rep = run_suite(std::slice::from_ref(&test), &[rcl(&aware)], &opts(vec![1.0])).unwrap();
    let avg_aware_1 = avg(&aware_rep, "rcl-robd", Some(1.0));

    let noisy_w = contaminate_windows(&test_w, 0.2, 0.1, 17).unwrap();
    let noisy = ev_dataset("test-contaminated", &noisy_w, &cfg);
    let noisy_rep = run_suite(
        &[noisy],
        &[Algorithm::Ml(AdvisorChoice::Predictor(oblivious.clone())), Algorithm::Expert(ExpertChoice::Robd(robd)), rcl(&oblivious)],
        &opts(vec![1.0]),
    )
    .unwrap();
    let cr_ml = noisy_rep.cell("ml", None).unwrap().cr;
    let cr_rcl = noisy_rep.cell("rcl-robd", Some(1.0)).unwrap().cr;

    let a = avg_5 <= avg_06;
    let b = cr_ml > cr_rcl;
    let c = avg_aware_1 <= avg_obl_1;
    verdict(
        a && b && c,
        format!(
            "(a) AVG λ=5 {avg_5:.4} ≤ λ=0.6 {avg_06:.4}: {a}; (b) contaminated CR ML {cr_ml:.4} > RCL(1) {cr_rcl:.4}: {b}; \
             (c) AVG aware {avg_aware_1:.4} ≤ oblivious {avg_obl_1:.4}: {c}; ML AVG {:.4}, ROBD AVG {:.4}; \
             contaminated CR ROBD {:.4}; clean CR ML {:.4}, ROBD {:.4}, RCL(1) {:.4}; \
             final train loss oblivious {:.4}, aware {:.4}",
            avg(&clean, "ml", None),
            avg(&clean, "robd", None),
            noisy_rep.cell("robd", None).unwrap().cr,
            clean.cell("ml", None).unwrap().cr,
            clean.cell("robd", None).unwrap().cr,
            clean.cell("rcl-robd", Some(1.0)).unwrap().cr,
            obl_curve.last().map_or(f64::NAN, |p| p.loss),
            aware_curve.last().map_or(f64::NAN, |p| p.loss),
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 11: delay schedules.

fn criterion11() -> Verdict {
    let ok1 = validate_delay(&DelaySchedule::no_delay(5), 5).is_ok();
    let ok2 = validate_delay(
        &DelaySchedule {
            q: 1,
            reveal_sets: vec![vec![], vec![1, 2], vec![3]],
        },
        3,
    )
    .is_ok();
    let bad = validate_delay(
        &DelaySchedule {
            q: 1,
            reveal_sets: vec![vec![], vec![2], vec![3]],
        },
        3,
    );
    let ok3 = matches!(bad, Err(v) if v.t == 2 && v.tau == 1 && v.kind == ViolationKind::Overdue);

    let mut rng = ChaCha8Rng::seed_from_u64(110_000);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let horizon = rng.random_range(1..30);
        let q = rng.random_range(0..6);
        let schedule = if trial % 2 == 0 {
            let delays: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..=q)).collect();
            DelaySchedule::from_delays(&delays, q).unwrap()
        } else {
            // Arbitrary, possibly invalid, assignments of indices to steps.
            let mut sets = vec![Vec::new(); horizon];
            for tau in 1..=horizon {
                if rng.random_bool(0.9) {
                    sets[rng.random_range(0..horizon)].push(tau);
                }
            }
            DelaySchedule { q, reveal_sets: sets }
        };
        let valid_by_construction = trial % 2 == 0;
        if valid_by_construction && validate_delay(&schedule, horizon).is_err() {
            mismatches += 1;
        }
        for t in 1..=horizon {
            let (a, b) = schedule.revealed_sets(t);
            let mut brute_a = BTreeSet::new();
            for s in 1..=t {
                for tau in 1..=horizon {
                    if schedule.reveal_sets[s - 1].contains(&tau) {
                        brute_a.insert(tau);
                    }
                }
            }
            let brute_b: BTreeSet<usize> = (1..=t).filter(|tau| !brute_a.contains(tau)).collect();
            if a != brute_a || b != brute_b {
                mismatches += 1;
            }
        }
    }
    verdict(
        ok1 && ok2 && ok3 && mismatches == 0,
        format!("fixtures accepted/accepted/rejected at (2,1): {ok1}/{ok2}/{ok3}; 1000 random schedules, {mismatches} mismatches"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();

    let t0 = Instant::now();
    let stats = (0..SUITE_SIZE)
        .into_par_iter()
        .map(run_case)
        .reduce(SuiteStats::new, SuiteStats::merge);
    let suite_secs = t0.elapsed().as_secs_f64();
    let clean = stats.errors.is_empty();
    let errs = if clean {
        String::new()
    } else {
        format!("; errors: {}", stats.errors.join(" | "))
    };
    results.push((
        1,
        "robustness cost(RCL) ≤ (1+λ)·cost(expert)",
        verdict(
            clean && stats.episodes == SUITE_SIZE * 10 && stats.worst_c1 <= 1.0,
            format!(
                "{} episodes in {suite_secs:.1}s, worst cost/((1+λ)(1+1e-6)·expert) = {:.6}{errs}",
                stats.episodes, stats.worst_c1
            ),
        ),
    ));
    results.push((
        2,
        "cost(RCL) within min(bound_expert, bound_ml)",
        verdict(
            clean && stats.worst_c2 <= 1e-6,
            format!("worst cost − bound = {:.3e}", stats.worst_c2),
        ),
    ));
    results.push((
        3,
        "expert action feasible at every step",
        verdict(clean && stats.min_c3 >= -1e-8, format!("minimum slack at x^π = {:.3e}", stats.min_c3)),
    ));

    let t0 = Instant::now();
    results.push((4, "implicit projection gradients", criterion4()));
    let c4_secs = t0.elapsed().as_secs_f64();
    results.last_mut().unwrap().2.detail += &format!(" ({c4_secs:.1}s)");

    let t0 = Instant::now();
    results.push((5, "robustification-aware weight gradient", criterion5()));
    let c5_secs = t0.elapsed().as_secs_f64();
    results.last_mut().unwrap().2.detail += &format!(" ({c5_secs:.1}s)");

    let (grid_gap, grid_n) = criterion6_grid();
    let (stat, stat_n) = criterion6_stationarity();
    results.push((
        6,
        "offline optimum",
        verdict(
            grid_gap <= 1e-4 && stat < 1e-7 && clean && stats.worst_c6 <= 1e-9,
            format!(
                "grid gap {grid_gap:.2e} on {grid_n} T=2 cases; stationarity {stat:.2e} on {stat_n} banded cases; \
                 worst (OPT − ALG)/ALG over suite {:.2e}",
                stats.worst_c6
            ),
        ),
    ));
    results.push((7, "large λ follows OPT advice verbatim", criterion7()));
    results.push((
        8,
        "exact projection no farther than closed-form projection",
        verdict(
            clean && stats.worst_c8 <= 1e-9,
            format!("{} projected steps, worst excess {:.3e}", stats.projected_steps, stats.worst_c8),
        ),
    ));
    results.push((9, "telescoping identity of G", criterion9()));

    let t0 = Instant::now();
    results.push((10, "trend reproduction on battery-style data", criterion10()));
    let c10_secs = t0.elapsed().as_secs_f64();
    results.last_mut().unwrap().2.detail += &format!(" ({c10_secs:.1}s)");

    results.push((11, "delay-schedule semantics", criterion11()));

    let mut failed = 0;
    for (id, name, v) in &results {
        if !v.pass {
            failed += 1;
        }
        println!(
            "acceptance {id:>2} {}: {name} -- {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance summary: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
