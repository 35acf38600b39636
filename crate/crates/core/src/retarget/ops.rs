//! The retargeting operations.

use crate::error::{Error, Result};
use crate::flow::{sample_forward, sample_reverse, train_coupled, CouplingBatch, FlowModel, LrSchedule, TrainConfig};
use crate::geometry::PointCloud;
use crate::latent::ShapeCodec;
use crate::util::{derive_rng, thread_pool};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetargetConfig {
    /// Forward sampling steps N.
    pub forward_steps: usize,
    /// Reverse sampling steps N_r (N_r <= N).
    pub reverse_steps: usize,
    /// Mixing scalar in [0,1]: 1 keeps the inverted latent, 0 draws pure
    /// prior noise.
    pub alpha: f64,
    pub finetune_lr: f64,
    pub finetune_epochs: usize,
    pub finetune_batch: usize,
    pub seed: u64,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self {
            forward_steps: 100,
            reverse_steps: 4,
            alpha: 0.5,
            finetune_lr: 2e-5,
            finetune_epochs: 100,
            finetune_batch: 32,
            seed: 0,
        }
    }
}

impl RetargetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reverse_steps < 1 || self.reverse_steps > self.forward_steps {
            return Err(Error::InvalidFlowInput(format!(
                "reverse steps {} outside [1, {}]",
                self.reverse_steps, self.forward_steps
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidFlowInput(format!(
                "alpha {} outside [0,1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// One fine-tuning pair: the rescaled inverted latent of a partial assembly
/// and the latent of its complete object. Stored as f32, the cache-file
/// precision.
#[derive(Debug, Clone, PartialEq)]
pub struct RetargetPair {
    pub x0: Vec<f32>,
    pub x1: Vec<f32>,
}

impl RetargetPair {
    pub fn from_states(x0: &[f64], x1: &[f64]) -> Result<Self> {
        if x0.len() != x1.len() {
            return Err(Error::InvalidFlowInput(format!(
                "pair dims {} vs {}",
                x0.len(),
                x1.len()
            )));
        }
        if !x0.iter().chain(x1).all(|v| v.is_finite()) {
            return Err(Error::InvalidFlowInput("non-finite pair entry".into()));
        }
        Ok(Self {
            x0: x0.iter().map(|&v| v as f32).collect(),
            x1: x1.iter().map(|&v| v as f32).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    fn to_coupling(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.x0.iter().map(|&v| v as f64).collect(),
            self.x1.iter().map(|&v| v as f64).collect(),
        )
    }
}

/// Pair-building result: the usable pairs plus per-instance failures
/// (index, message).
#[derive(Debug)]
pub struct BuiltPairs {
    pub pairs: Vec<RetargetPair>,
    pub failures: Vec<(usize, String)>,
}

/// Encode a partial assembly and run the flow ODE backward to its
/// noise-space preimage.
pub fn invert(
    model: &FlowModel,
    partial_cloud: &PointCloud,
    codec: &ShapeCodec,
    cfg: &RetargetConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let x1_hat = codec.encode_state(partial_cloud)?;
    sample_reverse(model, &x1_hat, cfg.reverse_steps)
}

/// x0 = alpha * x0_hat + sqrt(1 - alpha^2) * xi with xi ~ N(0, I). The
/// variance-preserving mixing keeps a standard-normal input standard
/// normal; alpha = 1 is the identity (no noise is drawn), alpha = 0 a pure
/// prior draw.
pub fn langevin_rescale(x0_hat: &[f64], alpha: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidFlowInput(format!(
            "alpha {alpha} outside [0,1]"
        )));
    }
    if alpha == 1.0 {
        return Ok(x0_hat.to_vec());
    }
    let noise_scale = (1.0 - alpha * alpha).sqrt();
    Ok(x0_hat
        .iter()
        .map(|&v| alpha * v + noise_scale * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Build fine-tuning pairs from (partial, complete) instances using the
/// base model for inversion. Instance failures are recorded and skipped;
/// it is an error for every instance to fail.
pub fn build_retarget_pairs(
    instances: &[(PointCloud, PointCloud)],
    model: &FlowModel,
    codec: &ShapeCodec,
    cfg: &RetargetConfig,
) -> Result<BuiltPairs> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let results: Vec<Result<RetargetPair>> = thread_pool().install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, (partial, complete))| {
                let x0_hat = invert(model, partial, codec, cfg)?;
                let mut rng = derive_rng(cfg.seed, "retarget-noise", i as u64);
                let x0 = langevin_rescale(&x0_hat, cfg.alpha, &mut rng)?;
                let x1 = codec.encode_state(complete)?;
                RetargetPair::from_states(&x0, &x1)
            })
            .collect()
    });
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => pairs.push(p),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidFlowInput(format!(
            "all {} retarget instances failed; first: {}",
            instances.len(),
            failures[0].1
        )));
    }
    Ok(BuiltPairs { pairs, failures })
}

/// Fine-tune the flow on fixed retarget pairs at a constant learning rate.
/// The base model is left untouched.
pub fn finetune(
    model: &FlowModel,
    pairs: &[RetargetPair],
    cfg: &RetargetConfig,
) -> Result<(FlowModel, Vec<(usize, f64)>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let batch = CouplingBatch::new(pairs.iter().map(|p| p.to_coupling()).collect())?;
    let train_cfg = TrainConfig {
        epochs: cfg.finetune_epochs,
        batch_size: cfg.finetune_batch,
        learning_rate: cfg.finetune_lr,
        schedule: LrSchedule::Constant,
        seed: cfg.seed,
        ..Default::default()
    };
    train_coupled(model, &batch, &train_cfg)
}

/// End-to-end complete-shape estimate for one partial assembly: invert,
/// rescale, sample forward, decode. Deterministic given (cfg.seed,
/// instance_seed); the output lives in normalized coordinates and is
/// denormalized by the caller's record.
pub fn reconstruct(
    model_ft: &FlowModel,
    partial_cloud: &PointCloud,
    codec: &ShapeCodec,
    cfg: &RetargetConfig,
    instance_seed: u64,
) -> Result<PointCloud> {
    cfg.validate()?;
    let x0_hat = invert(model_ft, partial_cloud, codec, cfg)?;
    let mut rng = derive_rng(cfg.seed, "reconstruct-noise", instance_seed);
    let x0 = langevin_rescale(&x0_hat, cfg.alpha, &mut rng)?;
    let trajectory = sample_forward(model_ft, &x0, cfg.forward_steps)?;
    codec.decode_state(trajectory.endpoint(), instance_seed)
}
