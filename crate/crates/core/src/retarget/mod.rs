//! Reconstruction by retargeting: invert a partial-assembly latent through
//! the flow, rescale it toward the prior, fine-tune on (inverted, complete)
//! pairs, and run end-to-end complete-shape estimation.

mod cache;
mod ops;

pub use cache::{load_pairs, save_pairs};
pub use ops::{
    build_retarget_pairs, finetune, invert, langevin_rescale, reconstruct, BuiltPairs,
    RetargetConfig, RetargetPair,
};
