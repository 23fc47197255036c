use nalgebra::DVector;
use rayon::prelude::*;

use super::kkt::{adjoint, constraint_past_gradient, kkt_blocks, restrict};
use super::net::Predictor;
use crate::error::Result;
use crate::experts::{cost_gradient, ExpertKind, ExpertTrace};
use crate::rcl::{RclConfig, RclContext, RclEpisode, StepDecision};
use crate::soco::{eval_cost, Action, CostModel, DelaySchedule, ProblemInstance};

/// One training episode with its (weight-independent) expert trace.
#[derive(Debug, Clone)]
pub struct Sample {
    pub instance: ProblemInstance,
    pub schedule: DelaySchedule,
    pub expert: ExpertTrace,
}

impl Sample {
    pub fn new(
        instance: ProblemInstance,
        schedule: DelaySchedule,
        model: &CostModel,
        expert: &ExpertKind,
    ) -> Result<Self> {
        let expert = expert.run(&instance, model, &schedule)?;
        Ok(Self {
            instance,
            schedule,
            expert,
        })
    }
}

/// Realised episode of robustified predictor advice.
#[derive(Debug, Clone)]
pub struct AwareEpisode {
    pub advice: Vec<Action>,
    pub decisions: Vec<StepDecision>,
    pub cost: f64,
}

fn ordered_mean(parts: Vec<(f64, Vec<f64>)>, len: usize) -> (f64, Vec<f64>) {
    let count = parts.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; len];
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|g| *g /= count);
    (loss / count, grad)
}

fn split(v: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
    v.as_slice().chunks(n).map(DVector::from_column_slice).collect()
}

/// Cost of the raw advice on one sample, and its weight gradient.
pub fn oblivious_episode(predictor: &Predictor, sample: &Sample, model: &CostModel) -> Result<(f64, Vec<f64>)> {
    let inst = &sample.instance;
    let fwd = predictor.forward(inst, &sample.schedule, &model.space);
    let cost = eval_cost(inst, model, &fwd.advice)?.total;
    let g = split(&cost_gradient(inst, model, &fwd.advice), inst.dim());
    let seeds: Vec<_> = fwd.outputs.iter().copied().zip(g).collect();
    Ok((cost, fwd.tape.backward(&predictor.params, &seeds)))
}

/// Runs RCL on the predictor's advice for one sample.
pub fn aware_rollout(
    predictor: &Predictor,
    sample: &Sample,
    model: &CostModel,
    config: RclConfig,
) -> Result<AwareEpisode> {
    let fwd = predictor.forward(&sample.instance, &sample.schedule, &model.space);
    let ctx = context(sample, model, config);
    let mut ep = RclEpisode::new(ctx)?;
    let decisions = fwd
        .advice
        .iter()
        .map(|a| ep.step(a))
        .collect::<Result<Vec<_>>>()?;
    let cost = ep.finish()?.total;
    Ok(AwareEpisode {
        advice: fwd.advice,
        decisions,
        cost,
    })
}

fn context<'a>(sample: &'a Sample, model: &'a CostModel, config: RclConfig) -> RclContext<'a> {
    RclContext {
        instance: &sample.instance,
        model,
        schedule: &sample.schedule,
        config,
        expert: &sample.expert,
    }
}

/// Cost after robustification on one sample, and its weight gradient
/// through the projection layers.
pub fn aware_episode(
    predictor: &Predictor,
    sample: &Sample,
    model: &CostModel,
    config: RclConfig,
) -> Result<(f64, Vec<f64>)> {
    let inst = &sample.instance;
    let n = inst.dim();
    let fwd = predictor.forward(inst, &sample.schedule, &model.space);
    let ctx = context(sample, model, config);
    let mut ep = RclEpisode::new(ctx)?;
    let mut steps = Vec::with_capacity(inst.horizon());
    for a in &fwd.advice {
        let c = ep.constraint();
        let d = ep.step(a)?;
        steps.push((c, d));
    }
    let actions: Vec<Action> = steps.iter().map(|(_, d)| d.action.clone()).collect();
    let cost = ep.finish()?.total;

    let space = &model.space;
    let (lo, hi) = (space.lower(), space.upper());
    let mut xbar = split(&cost_gradient(inst, model, &actions), n);
    let mut abar = vec![DVector::zeros(n); inst.horizon()];
    for t in (1..=inst.horizon()).rev() {
        let (c, d) = &steps[t - 1];
        let xb = xbar[t - 1].clone();
        let advice = &fwd.advice[t - 1];
        if !d.projected {
            abar[t - 1] = xb;
            continue;
        }
        if d.dual_mu == 0.0 {
            abar[t - 1] = DVector::from_fn(n, |i, _| {
                if advice[i] >= lo[i] && advice[i] <= hi[i] {
                    xb[i]
                } else {
                    0.0
                }
            });
            continue;
        }
        let x = &d.action;
        let free: Vec<bool> = (0..n).map(|i| x[i] > lo[i] && x[i] < hi[i]).collect();
        let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        if idx.is_empty() {
            continue;
        }
        let blocks = restrict(&kkt_blocks(x, d.dual_mu, c)?, &free)?;
        let xb_f = DVector::from_fn(idx.len(), |k, _| xb[idx[k]]);
        let (w, s) = adjoint(&blocks, &xb_f)?;
        for (k, &i) in idx.iter().enumerate() {
            abar[t - 1][i] = w[k];
        }
        let mu = d.dual_mu;
        let past = constraint_past_gradient(&ctx, &actions, t);
        let own = crate::soco::History::new(inst.initial_actions(), &actions[..t]);
        let lags = own.lags(t, model.p());
        let mut w_full = DVector::zeros(n);
        for (k, &i) in idx.iter().enumerate() {
            w_full[i] = w[k];
        }
        for s_idx in 1..t {
            let mut contrib = &past[s_idx - 1] * (mu * s);
            let slot = t - 1 - s_idx;
            if slot < model.p() {
                contrib += model.switching.jacobian(&lags, slot).transpose() * &w_full * mu;
            }
            xbar[s_idx - 1] += contrib;
        }
    }
    let seeds: Vec<_> = fwd.outputs.iter().copied().zip(abar).collect();
    Ok((cost, fwd.tape.backward(&predictor.params, &seeds)))
}

/// Mean raw-advice cost over `batch`.
pub fn loss_oblivious(predictor: &Predictor, batch: &[Sample], model: &CostModel) -> Result<f64> {
    let costs = batch
        .par_iter()
        .map(|s| {
            let f = predictor.forward(&s.instance, &s.schedule, &model.space);
            eval_cost(&s.instance, model, &f.advice).map(|t| t.total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(costs.iter().sum::<f64>() / costs.len().max(1) as f64)
}

/// Mean post-robustification cost over `batch`.
pub fn loss_aware(predictor: &Predictor, batch: &[Sample], model: &CostModel, config: RclConfig) -> Result<f64> {
    let costs = batch
        .par_iter()
        .map(|s| aware_rollout(predictor, s, model, config).map(|e| e.cost))
        .collect::<Result<Vec<_>>>()?;
    Ok(costs.iter().sum::<f64>() / costs.len().max(1) as f64)
}

pub fn grad_oblivious(predictor: &Predictor, batch: &[Sample], model: &CostModel) -> Result<(f64, Vec<f64>)> {
    let parts = batch
        .par_iter()
        .map(|s| oblivious_episode(predictor, s, model))
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_mean(parts, predictor.params.len()))
}

pub fn grad_aware(
    predictor: &Predictor,
    batch: &[Sample],
    model: &CostModel,
    config: RclConfig,
) -> Result<(f64, Vec<f64>)> {
    let parts = batch
        .par_iter()
        .map(|s| aware_episode(predictor, s, model, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_mean(parts, predictor.params.len()))
}
