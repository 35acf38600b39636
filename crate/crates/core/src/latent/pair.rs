//! Joint latent: global descriptor + voxel occupancy grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Codec dimensions. `grid_res` is the occupancy resolution per axis,
/// `global_dim` the descriptor length, `sat_count` the point count at which
/// a voxel's soft occupancy saturates to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatentConfig {
    pub grid_res: usize,
    pub global_dim: usize,
    pub sat_count: u32,
}

impl Default for LatentConfig {
    fn default() -> Self {
        Self {
            grid_res: 8,
            global_dim: 32,
            sat_count: 4,
        }
    }
}

impl LatentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_res < 4 {
            return Err(Error::InvalidLatentConfig(format!(
                "grid_res {} below 4",
                self.grid_res
            )));
        }
        if self.global_dim < 8 {
            return Err(Error::InvalidLatentConfig(format!(
                "global_dim {} below 8",
                self.global_dim
            )));
        }
        if self.sat_count < 1 {
            return Err(Error::InvalidLatentConfig("sat_count below 1".into()));
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.grid_res * self.grid_res * self.grid_res
    }

    /// Flattened state dimension the flow transports.
    pub fn state_dim(&self) -> usize {
        self.global_dim + self.voxel_count()
    }
}

/// The state the flow transports: a global descriptor `g` and a soft
/// occupancy grid `r` in [0,1].
///
/// Flattening layout (also the serialized payload order): all of `g`, then
/// `r` with x varying slowest and z fastest, i.e. voxel (x,y,z) at flat
/// offset `(x * R + y) * R + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPair {
    g: Vec<f32>,
    r: Vec<f32>,
    grid_res: usize,
    sat_count: u32,
}

impl LatentPair {
    pub fn new(g: Vec<f32>, r: Vec<f32>, grid_res: usize, sat_count: u32) -> Result<Self> {
        if r.len() != grid_res * grid_res * grid_res {
            return Err(Error::LatentDimMismatch {
                expected: grid_res * grid_res * grid_res,
                got: r.len(),
            });
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidLatentConfig("non-finite global entry".into()));
        }
        if !r.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::InvalidLatentConfig(
                "occupancy entry outside [0,1]".into(),
            ));
        }
        Ok(Self {
            g,
            r,
            grid_res,
            sat_count,
        })
    }

    pub fn global(&self) -> &[f32] {
        &self.g
    }

    pub fn occupancy(&self) -> &[f32] {
        &self.r
    }

    pub fn grid_res(&self) -> usize {
        self.grid_res
    }

    pub fn sat_count(&self) -> u32 {
        self.sat_count
    }

    pub fn state_dim(&self) -> usize {
        self.g.len() + self.r.len()
    }

    #[inline]
    pub fn voxel_index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.grid_res + y) * self.grid_res + z
    }

    pub fn occupancy_at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.r[self.voxel_index(x, y, z)]
    }

    /// Flatten into the flow's state vector: [g, r].
    pub fn to_state(&self) -> Vec<f64> {
        self.g
            .iter()
            .chain(self.r.iter())
            .map(|&v| v as f64)
            .collect()
    }

    /// Rebuild a latent from a flow state. Occupancy entries are clamped
    /// into [0,1]; clamping never changes which voxels clear a threshold in
    /// (0,1). Values are rounded to f32, the latent's storage precision.
    pub fn from_state(state: &[f64], cfg: &LatentConfig) -> Result<Self> {
        if state.len() != cfg.state_dim() {
            return Err(Error::LatentDimMismatch {
                expected: cfg.state_dim(),
                got: state.len(),
            });
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidLatentConfig("non-finite state entry".into()));
        }
        let g = state[..cfg.global_dim].iter().map(|&v| v as f32).collect();
        let r = state[cfg.global_dim..]
            .iter()
            .map(|&v| v.clamp(0.0, 1.0) as f32)
            .collect();
        Self::new(g, r, cfg.grid_res, cfg.sat_count)
    }
}
