//! Recurrent advice model, its gradient tape, the training losses and the
//! implicit layer through robustification.

mod checkpoint;
mod kkt;
mod losses;
mod net;
mod tape;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader};
pub use kkt::{adjoint, constraint_past_gradient, implicit_grads, kkt_blocks, restrict, ImplicitGrads, KktBlocks};
pub use losses::{
    aware_episode, aware_rollout, grad_aware, grad_oblivious, loss_aware, loss_oblivious,
    oblivious_episode, AwareEpisode, Sample,
};
pub use net::{Architecture, Forward, Predictor, PredictorAdvisor, Rollout};
pub use tape::{NodeId, Op, Params, Tape};
pub use train::{train, write_loss_curve, LossPoint, TrainHyper, TrainMode};
