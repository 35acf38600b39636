//! Run configuration: every knob of the pipeline in one nested, TOML-backed
//! structure.

use crate::error::{Error, Result};
use crate::flow::{MlpSpec, TrainConfig};
use crate::harness::{PerturbationSpec, ShapeCategory};
use crate::latent::LatentConfig;
use crate::retarget::RetargetConfig;
use crate::util::short_hash;
use crate::view::CameraRingParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub train_count: usize,
    pub test_count: usize,
    pub categories: Vec<ShapeCategory>,
    pub n_pts: usize,
    pub n_pieces: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            train_count: 20,
            test_count: 5,
            categories: vec![
                ShapeCategory::Revolution,
                ShapeCategory::Plate,
                ShapeCategory::Box,
            ],
            n_pts: 2048,
            n_pieces: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Occupancy threshold for emitting points.
    pub tau: f64,
    /// Points emitted per fully occupied voxel.
    pub pts_per_voxel: u32,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            pts_per_voxel: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowArchConfig {
    pub hidden: Vec<usize>,
    pub time_freqs: usize,
}

impl Default for FlowArchConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512; 4],
            time_freqs: 16,
        }
    }
}

impl FlowArchConfig {
    pub fn spec(&self, state_dim: usize) -> MlpSpec {
        MlpSpec {
            state_dim,
            hidden: self.hidden.clone(),
            time_freqs: self.time_freqs,
        }
    }
}

/// Pose-noise section of the run config (the stream seed comes from the
/// run's global seed at build time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub rot_sigma_deg: f64,
    pub trans_sigma: f64,
    pub drop_prob: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            rot_sigma_deg: 30.0,
            trans_sigma: 0.05,
            drop_prob: 0.2,
        }
    }
}

impl PerturbConfig {
    pub fn spec(&self, seed: u64) -> PerturbationSpec {
        PerturbationSpec {
            rot_sigma_deg: self.rot_sigma_deg,
            trans_sigma: self.trans_sigma,
            drop_prob: self.drop_prob,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Distance threshold for precision/recall.
    pub eta: f64,
    pub dataset: DatasetConfig,
    pub cameras: CameraRingParams,
    pub latent: LatentConfig,
    pub decode: DecodeConfig,
    pub flow: FlowArchConfig,
    pub train: TrainConfig,
    pub retarget: RetargetConfig,
    pub perturb: PerturbConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs/out"),
            eta: 0.02,
            dataset: DatasetConfig::default(),
            cameras: CameraRingParams::default(),
            latent: LatentConfig::default(),
            decode: DecodeConfig::default(),
            flow: FlowArchConfig::default(),
            train: TrainConfig::default(),
            retarget: RetargetConfig::default(),
            perturb: PerturbConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dataset.train_count < 1 || self.dataset.test_count < 1 {
            return Err(Error::InvalidRunConfig(
                "train and test counts must be >= 1".into(),
            ));
        }
        if self.dataset.categories.is_empty() {
            return Err(Error::InvalidRunConfig("no shape categories".into()));
        }
        if self.dataset.n_pieces < 2 {
            return Err(Error::InvalidRunConfig("n_pieces below 2".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidRunConfig(format!("eta {}", self.eta)));
        }
        if !(self.decode.tau > 0.0 && self.decode.tau < 1.0) {
            return Err(Error::InvalidRunConfig(format!(
                "tau {} outside (0,1)",
                self.decode.tau
            )));
        }
        self.latent.validate()?;
        self.train.validate()?;
        self.retarget.validate()?;
        self.perturb.spec(self.seed).validate()?;
        Ok(())
    }

    /// Canonical TOML rendering; also what the config hash is taken over.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Fingerprint carried by every output row this run produces. The
    /// output directory is not part of the fingerprint: the same run in a
    /// different location is still the same run.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        short_hash(canonical.to_toml().unwrap_or_default().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn toml_round_trip_preserves_the_config() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.dataset.train_count = 7;
        cfg.flow.hidden = vec![64, 64];
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_hash_tracks_content_but_not_location() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn partial_files_fill_defaults() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 9\n[dataset]\ntrain_count = 3\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dataset.train_count, 3);
        assert_eq!(cfg.dataset.test_count, 5); // default
        assert_eq!(cfg.eta, 0.02);
    }

    #[test]
    fn invalid_values_are_rejected_on_load() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "eta = -1.0\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
        std::fs::write(&path, "eta = [1, 2]\n").unwrap();
        assert!(matches!(
            RunConfig::load(&path),
            Err(Error::ConfigParse(_))
        ));
    }
}
