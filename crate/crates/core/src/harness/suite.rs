use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{BenchReport, CellReport, FailureRecord, PairRecord};
use crate::error::{Error, Result};
use crate::experts::{solve_opt, ExpertKind, ExpertTrace, RobdParams};
use crate::predictor::{Predictor, PredictorAdvisor};
use crate::rcl::{
    run_rcl_with_trace, Advisor, FixedAdvisor, Observation, RclConfig, UniformRandomAdvisor, ZeroAdvisor,
};
use crate::soco::{eval_cost, Action, Context, CostModel, DelaySchedule, ProblemInstance};

#[derive(Debug, Clone)]
pub struct SuiteItem {
    pub instance: ProblemInstance,
    pub schedule: DelaySchedule,
}

/// Instances sharing one cost model.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub model: CostModel,
    pub items: Vec<SuiteItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpertChoice {
    HitMin,
    Robd(RobdParams),
    IRobd(RobdParams),
    /// ROBD on contexts `y_t(1+u_t)`, `u_t ~ U[−error, error]`.
    RobdPredicted { params: RobdParams, error: f64, seed: u64 },
}

impl ExpertChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ExpertChoice::HitMin => "hitmin",
            ExpertChoice::Robd(_) => "robd",
            ExpertChoice::IRobd(_) => "irobd",
            ExpertChoice::RobdPredicted { .. } => "robd-predicted",
        }
    }

    fn resolve(&self, instance: &ProblemInstance, index: usize) -> ExpertKind {
        match self {
            ExpertChoice::HitMin => ExpertKind::HitMin,
            ExpertChoice::Robd(p) => ExpertKind::Robd(*p),
            ExpertChoice::IRobd(p) => ExpertKind::IRobd(*p),
            ExpertChoice::RobdPredicted { params, error, seed } => ExpertKind::RobdPredicted {
                params: *params,
                contexts: perturbed_contexts(instance, *error, seed.wrapping_add(index as u64)),
            },
        }
    }
}

/// Multiplicative per-step prediction error on every context.
pub fn perturbed_contexts(instance: &ProblemInstance, error: f64, seed: u64) -> Vec<Context> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instance
        .contexts()
        .iter()
        .map(|y| {
            let u = if error > 0.0 { rng.random_range(-error..=error) } else { 0.0 };
            y * (1.0 + u)
        })
        .collect()
}

/// Source of untrusted advice.
#[derive(Debug, Clone)]
pub enum AdvisorChoice {
    Predictor(Arc<Predictor>),
    Zero,
    /// Seeded per instance with `seed + index`.
    Uniform { seed: u64 },
    /// The expert's own actions.
    Expert,
    /// Clairvoyant offline optimum.
    Opt,
}

impl AdvisorChoice {
    pub fn name(&self) -> &'static str {
        match self {
            AdvisorChoice::Predictor(_) => "ml",
            AdvisorChoice::Zero => "zero",
            AdvisorChoice::Uniform { .. } => "uniform",
            AdvisorChoice::Expert => "expert",
            AdvisorChoice::Opt => "opt-advice",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Algorithm {
    Opt,
    Expert(ExpertChoice),
    /// Advice used directly.
    Ml(AdvisorChoice),
    /// Advice robustified against the expert, once per λ in the grid.
    Rcl { expert: ExpertChoice, advisor: AdvisorChoice },
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::Opt => "opt".into(),
            Algorithm::Expert(e) => e.name().into(),
            Algorithm::Ml(a) => a.name().into(),
            Algorithm::Rcl { expert, advisor } => match advisor {
                AdvisorChoice::Predictor(_) => format!("rcl-{}", expert.name()),
                a => format!("rcl-{}-{}", expert.name(), a.name()),
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub lambdas: Vec<f64>,
    /// Overrides the default `λ₀` split for every λ.
    pub lambda0: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

struct Run {
    cost: f64,
    projected: usize,
    steps: usize,
    pair: Option<(f64, f64)>,
}

/// Evaluates every (dataset, algorithm, λ) cell normalised by per-instance OPT.
///
/// Invalid configurations abort; numerical failures on single instances are
/// recorded in the report and the instance is left out of that cell.
pub fn run_suite(datasets: &[Dataset], algorithms: &[Algorithm], opts: &SuiteOptions) -> Result<BenchReport> {
    for &l in &opts.lambdas {
        match opts.lambda0 {
            Some(l0) => RclConfig::with_lambda0(l, l0)?,
            None => RclConfig::new(l)?,
        };
    }
    match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| suite_inner(datasets, algorithms, opts)),
        None => suite_inner(datasets, algorithms, opts),
    }
}

fn suite_inner(datasets: &[Dataset], algorithms: &[Algorithm], opts: &SuiteOptions) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for ds in datasets {
        let opt: Vec<Result<(f64, Vec<Action>)>> = ds
            .items
            .par_iter()
            .enumerate()
            .map(|(i, item)| {
                let traj = solve_opt(&item.instance, &ds.model)?;
                if !(traj.total > 0.0) {
                    return Err(Error::DegenerateInstance { index: i, cost: traj.total });
                }
                Ok((traj.total, traj.actions))
            })
            .collect();
        let mut live = Vec::new();
        for (i, r) in opt.into_iter().enumerate() {
            match r {
                Ok((cost, actions)) => live.push((i, cost, actions)),
                Err(e) if e.is_numerical() => report.failures.push(FailureRecord {
                    dataset: ds.name.clone(),
                    algorithm: "opt".into(),
                    lambda: None,
                    instance: i,
                    message: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        for alg in algorithms {
            let grid: Vec<Option<f64>> = match alg {
                Algorithm::Rcl { .. } => opts.lambdas.iter().copied().map(Some).collect(),
                _ => vec![None],
            };
            for lambda in grid {
                let config = match (lambda, opts.lambda0) {
                    (Some(l), Some(l0)) => Some(RclConfig::with_lambda0(l, l0)?),
                    (Some(l), None) => Some(RclConfig::new(l)?),
                    _ => None,
                };
                let runs: Vec<Result<Run>> = live
                    .par_iter()
                    .map(|(i, _, opt_actions)| run_one(ds, &ds.items[*i], *i, alg, config, opt_actions))
                    .collect();
                let mut cell = CellReport::new(&ds.name, alg.label(), lambda);
                let (mut projected, mut steps) = (0usize, 0usize);
                for ((i, opt_cost, _), r) in live.iter().zip(runs) {
                    match r {
                        Ok(run) => {
                            cell.instances.push(*i);
                            cell.ratios.push(run.cost / opt_cost);
                            projected += run.projected;
                            steps += run.steps;
                            if let (Some((e, m)), Some(l)) = (run.pair, lambda) {
                                report.pairs.push(PairRecord {
                                    dataset: ds.name.clone(),
                                    algorithm: cell.algorithm.clone(),
                                    lambda: l,
                                    instance: *i,
                                    vs_expert: run.cost / e,
                                    vs_ml: run.cost / m,
                                });
                            }
                        }
                        Err(e) if e.is_numerical() => {
                            cell.failures += 1;
                            report.failures.push(FailureRecord {
                                dataset: ds.name.clone(),
                                algorithm: cell.algorithm.clone(),
                                lambda,
                                instance: *i,
                                message: e.to_string(),
                            });
                        }
                        Err(e) => return Err(e),
                    }
                }
                if matches!(alg, Algorithm::Rcl { .. }) && steps > 0 {
                    cell.frac_projected = Some(projected as f64 / steps as f64);
                }
                cell.finalize();
                report.cells.push(cell);
            }
        }
    }
    Ok(report)
}

fn advise_all(advisor: &mut dyn Advisor, item: &SuiteItem, model: &CostModel) -> Vec<Action> {
    let inst = &item.instance;
    (1..=inst.horizon())
        .map(|t| {
            let obs = Observation {
                t,
                revealed: item
                    .schedule
                    .revealed_at(t)
                    .iter()
                    .map(|&tau| (tau, inst.context(tau)))
                    .collect(),
                space: &model.space,
            };
            model.space.clip(&advisor.advise(&obs))
        })
        .collect()
}

fn check_predictor(pred: &Predictor, inst: &ProblemInstance, model: &CostModel) -> Result<()> {
    let a = pred.arch;
    if a.action_dim != inst.dim() || a.context_dim != inst.context_dim() || a.memory != model.p() {
        return Err(Error::InvalidInput(format!(
            "predictor shape (n={}, m={}, p={}) does not match data (n={}, m={}, p={})",
            a.action_dim,
            a.context_dim,
            a.memory,
            inst.dim(),
            inst.context_dim(),
            model.p()
        )));
    }
    Ok(())
}

fn make_advisor<'a>(
    choice: &'a AdvisorChoice,
    item: &SuiteItem,
    model: &'a CostModel,
    index: usize,
    opt_actions: &[Action],
    expert: Option<&ExpertTrace>,
) -> Result<Box<dyn Advisor + 'a>> {
    Ok(match choice {
        AdvisorChoice::Predictor(p) => {
            check_predictor(p, &item.instance, model)?;
            Box::new(PredictorAdvisor::new(p, &item.instance, &model.space))
        }
        AdvisorChoice::Zero => Box::new(ZeroAdvisor),
        AdvisorChoice::Uniform { seed } => Box::new(UniformRandomAdvisor::new(seed.wrapping_add(index as u64))),
        AdvisorChoice::Opt => Box::new(FixedAdvisor::new(opt_actions.to_vec())),
        AdvisorChoice::Expert => match expert {
            Some(tr) => Box::new(FixedAdvisor::from(tr)),
            None => return Err(Error::InvalidInput("expert advice needs an expert".into())),
        },
    })
}

fn run_one(
    ds: &Dataset,
    item: &SuiteItem,
    index: usize,
    alg: &Algorithm,
    config: Option<RclConfig>,
    opt_actions: &[Action],
) -> Result<Run> {
    let model = &ds.model;
    let inst = &item.instance;
    let steps = inst.horizon();
    let plain = |cost| Run {
        cost,
        projected: 0,
        steps,
        pair: None,
    };
    match alg {
        Algorithm::Opt => Ok(plain(eval_cost(inst, model, opt_actions)?.total)),
        Algorithm::Expert(e) => {
            let tr = e.resolve(inst, index).run(inst, model, &item.schedule)?;
            Ok(plain(eval_cost(inst, model, &tr.actions)?.total))
        }
        Algorithm::Ml(a) => {
            if matches!(a, AdvisorChoice::Expert) {
                return Err(Error::InvalidInput("expert advice needs an expert".into()));
            }
            let mut adv = make_advisor(a, item, model, index, opt_actions, None)?;
            let advice = advise_all(adv.as_mut(), item, model);
            Ok(plain(eval_cost(inst, model, &advice)?.total))
        }
        Algorithm::Rcl { expert, advisor } => {
            let config = config.ok_or_else(|| Error::InvalidInput("RCL needs a lambda".into()))?;
            let trace = expert.resolve(inst, index).run(inst, model, &item.schedule)?;
            let expert_cost = eval_cost(inst, model, &trace.actions)?.total;
            let mut adv = make_advisor(advisor, item, model, index, opt_actions, Some(&trace))?;
            let out = run_rcl_with_trace(inst, model, &item.schedule, config, trace, adv.as_mut())?;
            let clipped: Vec<Action> = out.advice.iter().map(|a| model.space.clip(a)).collect();
            let ml_cost = eval_cost(inst, model, &clipped)?.total;
            Ok(Run {
                cost: out.trajectory.total,
                projected: out.decisions.iter().filter(|d| d.projected).count(),
                steps,
                pair: Some((expert_cost, ml_cost)),
            })
        }
    }
}
