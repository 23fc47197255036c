//! Datasets and benchmark suites.

mod contaminate;
mod ev;
mod ingest;
mod report;
mod suite;
mod synthetic;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::soco::ProblemInstance;

pub use contaminate::{contaminate, contaminate_windows};
pub use ev::{ev_contexts, reduce_ev, EvConfig, EV_COST_SCALE};
pub use ingest::{ingest_demand_csv, read_demand_csv, sliding_windows};
pub use report::{histogram, write_histogram_csv, BenchReport, CellReport, FailureRecord, PairRecord};
pub use suite::{
    perturbed_contexts, run_suite, AdvisorChoice, Algorithm, Dataset, ExpertChoice, SuiteItem, SuiteOptions,
};
pub use synthetic::{gen_synthetic, Family, SyntheticSpec};

/// An initial level followed by a demand series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandWindow {
    pub initial: DVector<f64>,
    pub demands: Vec<DVector<f64>>,
}

impl DemandWindow {
    /// Direct tracking instance: contexts are the demands and the `p`
    /// initial actions all equal the initial level.
    pub fn to_tracking_instance(&self, p: usize) -> Result<ProblemInstance> {
        ProblemInstance::new(self.demands.clone(), vec![self.initial.clone(); p.max(1)])
    }
}

/// Contiguous thirds `(train, valid, test)`; the remainder goes to train.
pub fn split_thirds<T: Clone>(items: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let third = items.len() / 3;
    let cut = items.len() - 2 * third;
    (
        items[..cut].to_vec(),
        items[cut..cut + third].to_vec(),
        items[cut + third..].to_vec(),
    )
}
