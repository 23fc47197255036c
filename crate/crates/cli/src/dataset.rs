//! On-disk datasets: a directory of instance files plus `model.json`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use rcl_core::harness::{Dataset, EvConfig, SuiteItem};
use rcl_core::soco::io::{read_instance, write_instance};
use rcl_core::soco::{ActionSpace, CostModel, DelaySchedule, HittingCost, ProblemInstance, SwitchingMemory};

use crate::error::{CliError, CliResult, IoContext};

pub const MODEL_FILE: &str = "model.json";

/// Serializable description of the cost model shared by a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// `(1/b)‖x − y‖²` with `δ = Σᵢ wᵢ·x_{t−i}` on the box `[lower, upper]ⁿ`.
    Tracking {
        dim: usize,
        b: f64,
        lower: f64,
        upper: f64,
        memory: Vec<f64>,
    },
    /// Battery tracking reduction.
    Ev(EvConfig),
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<CostModel> {
        match self {
            ModelSpec::Tracking {
                dim,
                b,
                lower,
                upper,
                memory,
            } => {
                let switching = match memory.as_slice() {
                    [] => return Err(CliError::usage("memory weights must be nonempty")),
                    [w] if *w == 1.0 => SwitchingMemory::identity(),
                    [w] => SwitchingMemory::linear(DMatrix::identity(*dim, *dim) * *w)?,
                    ws => SwitchingMemory::multi_linear(
                        ws.iter().map(|w| DMatrix::identity(*dim, *dim) * *w).collect(),
                    )?,
                };
                Ok(CostModel::new(
                    HittingCost::quadratic_tracking(*dim, *b)?,
                    switching,
                    ActionSpace::uniform(*dim, *lower, *upper)?,
                ))
            }
            ModelSpec::Ev(cfg) => Ok(cfg.model()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub model: ModelSpec,
    /// Largest context delay in any schedule.
    pub delay: usize,
    pub count: usize,
}

fn instance_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("inst_{i:05}.csv"))
}

pub fn write_dataset(dir: &Path, meta: &DatasetMeta, items: &[(ProblemInstance, DelaySchedule)]) -> CliResult<()> {
    fs::create_dir_all(dir).at(dir)?;
    for (i, (inst, sched)) in items.iter().enumerate() {
        write_instance(&instance_path(dir, i), inst, sched)?;
    }
    let path = dir.join(MODEL_FILE);
    let text = serde_json::to_string_pretty(meta).map_err(rcl_core::Error::from)?;
    fs::write(&path, text).at(&path)?;
    Ok(())
}

pub struct LoadedDataset {
    pub meta: DatasetMeta,
    pub model: CostModel,
    pub items: Vec<SuiteItem>,
}

pub fn read_dataset(dir: &Path) -> CliResult<LoadedDataset> {
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).at(&path)?;
    let meta: DatasetMeta = serde_json::from_str(&text).map_err(|source| CliError::Config { path, source })?;
    let model = meta.model.build()?;
    let items = (0..meta.count)
        .map(|i| {
            let p = instance_path(dir, i);
            if !p.exists() {
                return Err(CliError::Io {
                    path: p,
                    source: std::io::ErrorKind::NotFound.into(),
                });
            }
            let (instance, schedule) = read_instance(&p)?;
            Ok(SuiteItem { instance, schedule })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LoadedDataset { meta, model, items })
}

impl LoadedDataset {
    pub fn into_dataset(self, name: &str, items: Vec<SuiteItem>) -> Dataset {
        Dataset {
            name: name.into(),
            model: self.model,
            items,
        }
    }
}
