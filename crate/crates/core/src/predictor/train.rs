use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::losses::{aware_episode, oblivious_episode, Sample};
use super::net::Predictor;
use crate::error::{Error, Result};
use crate::rcl::RclConfig;
use crate::soco::CostModel;

/// Which loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum TrainMode {
    /// Cost of the raw advice.
    Oblivious,
    /// Cost after robustification with `config`.
    Aware { config: RclConfig },
}

impl TrainMode {
    pub fn name(&self) -> &'static str {
        match self {
            TrainMode::Oblivious => "oblivious",
            TrainMode::Aware { .. } => "aware",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Gradients with a larger norm are rescaled to this norm.
    pub clip_norm: f64,
    pub momentum: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            epochs: 140,
            batch: 50,
            lr: 1e-3,
            seed: 0,
            clip_norm: 10.0,
            momentum: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub loss: f64,
}

/// Mini-batch SGD with gradient clipping. The curve reports, per epoch, the
/// mean over samples of the loss seen during that epoch.
pub fn train(
    predictor: &mut Predictor,
    data: &[Sample],
    model: &CostModel,
    mode: TrainMode,
    hyper: &TrainHyper,
) -> Result<Vec<LossPoint>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let batch = hyper.batch.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut velocity = vec![0.0; predictor.params.len()];
    let mut curve = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut seen = vec![0.0; data.len()];
        for chunk in order.chunks(batch) {
            let current: &Predictor = predictor;
            let per_item: Vec<(f64, Vec<f64>)> = chunk
                .par_iter()
                .map(|&i| match mode {
                    TrainMode::Oblivious => oblivious_episode(current, &data[i], model),
                    TrainMode::Aware { config } => aware_episode(current, &data[i], model, config),
                })
                .collect::<Result<_>>()?;
            let (loss, mut grad) = {
                let mut g = vec![0.0; predictor.params.len()];
                let mut l = 0.0;
                for (&i, (li, gi)) in chunk.iter().zip(&per_item) {
                    seen[i] = *li;
                    l += li;
                    for (a, b) in g.iter_mut().zip(gi) {
                        *a += b;
                    }
                }
                let k = chunk.len() as f64;
                g.iter_mut().for_each(|v| *v /= k);
                (l / k, g)
            };
            if !loss.is_finite() || loss > 1e12 || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, loss });
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > hyper.clip_norm {
                let scale = hyper.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
            for ((w, v), g) in predictor
                .params
                .flat_mut()
                .iter_mut()
                .zip(velocity.iter_mut())
                .zip(&grad)
            {
                *v = hyper.momentum * *v + g;
                *w -= hyper.lr * *v;
            }
        }
        curve.push(LossPoint {
            epoch,
            loss: seen.iter().sum::<f64>() / data.len() as f64,
        });
    }
    Ok(curve)
}

/// Loss curve as CSV with columns `epoch, loss`.
pub fn write_loss_curve<W: Write>(curve: &[LossPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "loss"])?;
    for p in curve {
        w.write_record([p.epoch.to_string(), format!("{:?}", p.loss)])?;
    }
    w.flush()?;
    Ok(())
}
