//! Point-cloud containers, rigid poses, nearest-neighbor search,
//! normalization, and evaluation metrics.

mod cloud;
mod io;
mod kdtree;
mod metrics;
mod pose;

pub use cloud::{normalize_cloud, NormalizationRecord, PointCloud};
pub use io::{load_cloud, save_cloud, load_xyz, save_xyz, load_ply, save_ply};
pub use kdtree::KdTree3;
pub use metrics::{chamfer_distance, nearest_neighbor, precision_recall, MetricsReport};
pub use pose::{apply_pose, RigidPose};
