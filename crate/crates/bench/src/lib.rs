//! Shared fixtures for the benchmarks.

use nalgebra::DMatrix;
use rcl_core::harness::{gen_synthetic, Family, SyntheticSpec};
use rcl_core::soco::{ActionSpace, CostModel, DelaySchedule, HittingCost, ProblemInstance, SwitchingMemory};

pub struct Fixture {
    pub instance: ProblemInstance,
    pub model: CostModel,
    pub schedule: DelaySchedule,
}

/// Sinusoid tracking instance with `p` equal memory weights summing to 0.9.
pub fn fixture(horizon: usize, n: usize, p: usize, q: usize, seed: u64) -> Fixture {
    let window = gen_synthetic(seed, &SyntheticSpec::new(Family::SinusoidNoise, 1, horizon, n)).remove(0);
    let blocks = vec![DMatrix::identity(n, n) * (0.9 / p as f64); p];
    let model = CostModel::new(
        HittingCost::quadratic_tracking(n, 2.0).expect("valid weight"),
        SwitchingMemory::multi_linear(blocks).expect("valid blocks"),
        ActionSpace::uniform(n, 0.0, 1.0).expect("valid box"),
    );
    Fixture {
        instance: window.to_tracking_instance(p).expect("valid window"),
        model,
        schedule: DelaySchedule::identical(horizon, q),
    }
}
