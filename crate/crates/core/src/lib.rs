//! Robustness-constrained learning (RCL) for smoothed online convex
//! optimization with multi-step switching memory and delayed hitting-cost
//! feedback.
//!
//! The crate is organised around the flow of an experiment:
//!
//! * [`soco`] holds problem instances, cost models, delay schedules and metrics.
//! * [`experts`] implements the trusted online baselines and the offline optimum.
//! * [`rcl`] robustifies untrusted advice against an expert, step by step.
//! * [`predictor`] is the recurrent advice model with its gradient tape and the
//!   implicit differentiation through the robustification step.
//! * [`harness`] builds datasets (EV battery reduction, synthetic families) and
//!   runs benchmark suites.

pub mod error;
pub mod experts;
pub mod harness;
pub mod linalg;
pub mod optim;
pub mod predictor;
pub mod rcl;
pub mod soco;

pub use error::{Error, Result};
pub use experts::{ExpertKind, ExpertTrace, RobdParams};
pub use rcl::{RclConfig, StepDecision};
pub use soco::{
    Action, ActionSpace, Context, CostModel, DelaySchedule, HittingCost, MemoryMap,
    ProblemInstance, SwitchingMemory, Trajectory,
};
