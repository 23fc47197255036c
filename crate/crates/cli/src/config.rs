//! JSON run configuration. Every field is optional; command-line flags win
//! over file values, and `SOCO_RCL_SEED` is the last fallback for the seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, IoContext};

pub const SEED_ENV: &str = "SOCO_RCL_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub algorithms: Option<Vec<String>>,
    pub lambdas: Option<Vec<f64>>,
    pub lambda0: Option<f64>,
    pub delay: Option<usize>,
    pub split: Option<String>,
    pub gen: GenConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub family: Option<String>,
    pub count: Option<usize>,
    pub horizon: Option<usize>,
    pub dim: Option<usize>,
    pub memory: Option<Vec<f64>>,
    pub b: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub random_delay: Option<bool>,
    pub ev: Option<PathBuf>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub contaminate: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: Option<String>,
    pub lambda: Option<f64>,
    pub expert: Option<String>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub clip_norm: Option<f64>,
    pub momentum: Option<f64>,
    pub hidden: Option<usize>,
    pub loss_csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).at(path)?;
        serde_json::from_str(&text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Flag, then file, then environment, then 0.
    pub fn seed(&self, flag: Option<u64>) -> CliResult<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    /// λ grid with `λ > 0` and, when set, `λ₀ < λ`.
    pub fn check_lambdas(lambdas: &[f64], lambda0: Option<f64>) -> CliResult<()> {
        for &l in lambdas {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::usage(format!("lambda must be positive, got {l}")));
            }
            if let Some(l0) = lambda0 {
                if !(l0 > 0.0 && l0 < l) {
                    return Err(CliError::usage(format!("lambda0 must lie in (0, {l}), got {l0}")));
                }
            }
        }
        Ok(())
    }
}

/// Which contiguous third of a dataset to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    All,
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "all" => Ok(Split::All),
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(CliError::usage(format!("unknown split {s:?}; expected all, train, valid or test"))),
        }
    }

    pub fn select<T: Clone>(self, items: &[T]) -> Vec<T> {
        let (a, b, c) = rcl_core::harness::split_thirds(items);
        match self {
            Split::All => items.to_vec(),
            Split::Train => a,
            Split::Valid => b,
            Split::Test => c,
        }
    }
}
