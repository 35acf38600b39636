//! Voxelization, multi-view encoding, and latent decoding.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::latent::{global_descriptor, LatentConfig, LatentPair};
use crate::util::derive_rng;
use crate::view::{render_views, unproject, CameraModel, CameraRingParams, RenderedView};
use nalgebra::Vector3;
use rand::Rng;

/// Soft-occupancy voxelization of a normalized cloud: voxel index
/// floor(p*R) clamped to R-1, occupancy min(count, sat)/sat.
pub fn voxelize(cloud: &PointCloud, cfg: &LatentConfig) -> Result<Vec<f32>> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let r = cfg.grid_res;
    let mut counts = vec![0u32; cfg.voxel_count()];
    for p in cloud.points() {
        if !p.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::UnnormalizedInput([p.x, p.y, p.z]));
        }
        let idx = |c: f64| ((c * r as f64).floor() as usize).min(r - 1);
        counts[(idx(p.x) * r + idx(p.y)) * r + idx(p.z)] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c.min(cfg.sat_count) as f32 / cfg.sat_count as f32)
        .collect())
}

/// Encode rendered views into a joint latent: unproject every view, union
/// the partial clouds, then voxelize and pool. Views that cover nothing are
/// tolerated as long as at least one does not.
///
/// Ray alignment can push unprojected points a hair outside the unit cube;
/// the union is clamped back in before voxelization.
pub fn encode_views(
    views: &[RenderedView],
    cameras: &[CameraModel],
    cfg: &LatentConfig,
) -> Result<LatentPair> {
    cfg.validate()?;
    if views.is_empty() || views.len() != cameras.len() {
        return Err(Error::InvalidLatentConfig(format!(
            "{} views for {} cameras",
            views.len(),
            cameras.len()
        )));
    }
    let mut parts = Vec::with_capacity(views.len());
    for (view, camera) in views.iter().zip(cameras) {
        match unproject(view, camera) {
            Ok(part) => parts.push(part),
            Err(Error::EmptyView) => continue,
            Err(e) => return Err(e),
        }
    }
    if parts.is_empty() {
        return Err(Error::NoVisibleGeometry);
    }
    let union = PointCloud::union(parts.iter());
    let clamped = PointCloud::new(
        union
            .points()
            .iter()
            .map(|p| p.map(|c| c.clamp(0.0, 1.0)))
            .collect(),
    )?;
    let r = voxelize(&clamped, cfg)?;
    let g: Vec<f32> = global_descriptor(&clamped, cfg.global_dim)?
        .into_iter()
        .map(|v| v as f32)
        .collect();
    LatentPair::new(g, r, cfg.grid_res, cfg.sat_count)
}

/// Emit round(pts_per_voxel * occupancy) points at the center of every
/// voxel clearing `tau`, plus seeded uniform jitter within the voxel.
pub fn decode_latent(
    latent: &LatentPair,
    tau: f64,
    pts_per_voxel: u32,
    seed: u64,
) -> Result<PointCloud> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidLatentConfig(format!(
            "tau {tau} outside (0,1)"
        )));
    }
    if pts_per_voxel < 1 {
        return Err(Error::InvalidLatentConfig("pts_per_voxel below 1".into()));
    }
    let r = latent.grid_res();
    let h = 1.0 / r as f64;
    let mut rng = derive_rng(seed, "decode-jitter", 0);
    let mut points = Vec::new();
    for x in 0..r {
        for y in 0..r {
            for z in 0..r {
                let occ = latent.occupancy_at(x, y, z) as f64;
                if occ < tau {
                    continue;
                }
                let count = (pts_per_voxel as f64 * occ).round() as usize;
                let center = Vector3::new(
                    (x as f64 + 0.5) * h,
                    (y as f64 + 0.5) * h,
                    (z as f64 + 0.5) * h,
                );
                for _ in 0..count {
                    let jitter = Vector3::new(
                        (rng.random::<f64>() - 0.5) * h,
                        (rng.random::<f64>() - 0.5) * h,
                        (rng.random::<f64>() - 0.5) * h,
                    );
                    points.push(center + jitter);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyDecode);
    }
    PointCloud::new(points)
}

/// The full cloud <-> latent path: render under a camera ring, unproject,
/// voxelize and pool; or decode a latent back to points. This is the
/// pipeline's stand-in for a learned image encoder/decoder, so every stage
/// is deterministic.
#[derive(Debug, Clone)]
pub struct ShapeCodec {
    cameras: Vec<CameraModel>,
    splat_px: u32,
    latent_cfg: LatentConfig,
    pub tau: f64,
    pub pts_per_voxel: u32,
}

impl ShapeCodec {
    pub fn new(ring: &CameraRingParams, latent_cfg: LatentConfig) -> Result<Self> {
        latent_cfg.validate()?;
        Ok(Self {
            cameras: ring.build()?,
            splat_px: ring.splat_px,
            latent_cfg,
            tau: 0.5,
            pts_per_voxel: 8,
        })
    }

    pub fn cameras(&self) -> &[CameraModel] {
        &self.cameras
    }

    pub fn latent_config(&self) -> &LatentConfig {
        &self.latent_cfg
    }

    pub fn state_dim(&self) -> usize {
        self.latent_cfg.state_dim()
    }

    /// Normalized cloud -> joint latent.
    pub fn encode(&self, cloud: &PointCloud) -> Result<LatentPair> {
        let views = render_views(cloud, &self.cameras, self.splat_px)?;
        encode_views(&views, &self.cameras, &self.latent_cfg)
    }

    /// Normalized cloud -> flattened flow state.
    pub fn encode_state(&self, cloud: &PointCloud) -> Result<Vec<f64>> {
        Ok(self.encode(cloud)?.to_state())
    }

    /// Flattened flow state -> decoded point cloud.
    pub fn decode_state(&self, state: &[f64], seed: u64) -> Result<PointCloud> {
        let latent = LatentPair::from_state(state, &self.latent_cfg)?;
        decode_latent(&latent, self.tau, self.pts_per_voxel, seed)
    }
}
