//! Deterministic multi-view shape codec: turns rendered views into a joint
//! (global descriptor, voxel occupancy) latent and decodes a latent back
//! into a point cloud.

mod codec;
mod descriptor;
mod file;
mod pair;

pub use codec::{decode_latent, encode_views, voxelize, ShapeCodec};
pub use descriptor::global_descriptor;
pub use file::{load_latent, save_latent};
pub use pair::{LatentConfig, LatentPair};
