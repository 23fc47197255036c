use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DemandWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Clamped Gaussian random walk.
    RandomWalk,
    /// Daily sinusoid with a random phase plus noise.
    SinusoidNoise,
    /// Alternates near-minimum and near-maximum demand.
    AdversarialSpike,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::RandomWalk, Family::SinusoidNoise, Family::AdversarialSpike];

    pub fn name(&self) -> &'static str {
        match self {
            Family::RandomWalk => "random-walk",
            Family::SinusoidNoise => "sinusoid-noise",
            Family::AdversarialSpike => "adversarial-spike",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Shape of a synthetic demand set; every value lies in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub count: usize,
    pub horizon: usize,
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl SyntheticSpec {
    pub fn new(family: Family, count: usize, horizon: usize, dim: usize) -> Self {
        Self {
            family,
            count,
            horizon,
            dim,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

/// Deterministic demand windows for `seed`.
pub fn gen_synthetic(seed: u64, spec: &SyntheticSpec) -> Vec<DemandWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (spec.lo, spec.hi);
    let span = hi - lo;
    let clamp = |v: f64| v.max(lo).min(hi);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    (0..spec.count)
        .map(|_| {
            let len = spec.horizon + 1;
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(spec.dim);
            for _ in 0..spec.dim {
                let col: Vec<f64> = match spec.family {
                    Family::RandomWalk => {
                        let mut v = rng.random_range(lo..=hi);
                        (0..len)
                            .map(|_| {
                                let out = v;
                                v = clamp(v + 0.1 * span * noise.sample(&mut rng));
                                out
                            })
                            .collect()
                    }
                    Family::SinusoidNoise => {
                        let phase = rng.random_range(0.0..std::f64::consts::TAU);
                        (0..len)
                            .map(|t| {
                                let base = 0.5 + 0.4 * (std::f64::consts::TAU * t as f64 / 24.0 + phase).sin();
                                clamp(lo + span * (base + 0.05 * noise.sample(&mut rng)))
                            })
                            .collect()
                    }
                    Family::AdversarialSpike => {
                        let start = rng.random_bool(0.5);
                        (0..len)
                            .map(|t| {
                                let jitter = rng.random_range(0.0..0.05) * span;
                                if (t % 2 == 0) == start {
                                    lo + jitter
                                } else {
                                    hi - jitter
                                }
                            })
                            .collect()
                    }
                };
                cols.push(col);
            }
            let row = |t: usize| DVector::from_fn(spec.dim, |i, _| cols[i][t]);
            DemandWindow {
                initial: row(0),
                demands: (1..len).map(row).collect(),
            }
        })
        .collect()
}
