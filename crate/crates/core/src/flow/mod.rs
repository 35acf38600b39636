//! Rectified-flow generative core: velocity-field model, training
//! objective, Euler solvers, straightness diagnostics, reflow, and
//! checkpointing.

mod checkpoint;
mod mlp;
mod solver;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use mlp::{velocity_eval, FlowModel, MlpSpec, Sample};
pub use solver::{sample_forward, sample_reverse, straightness, SolverConfig, Trajectory};
pub use train::{
    flow_loss, reflow, train_coupled, train_flow, CouplingBatch, LrSchedule, TrainConfig,
};
