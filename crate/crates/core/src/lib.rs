//! Reconstruction of complete 3D shapes from partially assembled fractured
//! point clouds.
//!
//! The pipeline has three legs:
//!
//! 1. A bidirectional point-cloud/image codec: normalized positions are
//!    encoded as RGB colors, splatted through pinhole cameras, and decoded
//!    back by unprojecting masked pixels onto their camera rays
//!    ([`view`], [`latent`]).
//! 2. A rectified-flow generative prior over joint (global descriptor,
//!    voxel occupancy) latents, trained to transport Gaussian noise to the
//!    latent distribution of complete objects ([`flow`]).
//! 3. A retargeting stage that inverts the latent of a partial assembly,
//!    rescales it toward the prior, and fine-tunes the flow on
//!    (inverted partial, complete) pairs so that forward sampling produces
//!    a complete-shape estimate ([`retarget`]).
//!
//! [`harness`] provides synthetic shapes, planar fracturing, pose
//! perturbation, and the benchmark/ablation drivers behind the `jgpp` CLI.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod latent;
pub mod retarget;
pub mod util;
pub mod view;

pub use error::{Error, Result};
