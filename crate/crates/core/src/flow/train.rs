//! Training: the rectified-flow objective under Adam with an optional
//! cosine schedule, for both fresh-noise couplings and fixed pairs.

use crate::error::{Error, Result};
use crate::flow::solver::sample_forward;
use crate::flow::{FlowModel, MlpSpec, Sample};
use crate::util::derive_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Paired endpoints (x0, x1) the field is regressed on.
#[derive(Debug, Clone, Default)]
pub struct CouplingBatch {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl CouplingBatch {
    pub fn new(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        for (x0, x1) in &pairs {
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
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate down to `min_lr` over the run.
    Cosine { min_lr: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 32,
            learning_rate: 1e-4,
            schedule: LrSchedule::Cosine { min_lr: 1e-6 },
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidFlowInput(format!(
                "learning rate {} not positive",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidFlowInput("batch_size below 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidFlowInput("epochs below 1".into()));
        }
        Ok(())
    }

    fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine { min_lr } => {
                let frac = if total_steps <= 1 {
                    1.0
                } else {
                    step as f64 / (total_steps - 1) as f64
                };
                min_lr
                    + 0.5 * (self.learning_rate - min_lr) * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

/// The rectified-flow objective on explicit pairs and time draws:
/// mean over pairs of ||(x1 - x0) - v(xt, t)||^2 with xt = (1-t)x0 + t*x1.
pub fn flow_loss(model: &FlowModel, batch: &CouplingBatch, t_draws: &[f64]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if t_draws.len() != batch.len() {
        return Err(Error::InvalidFlowInput(format!(
            "{} time draws for {} pairs",
            t_draws.len(),
            batch.len()
        )));
    }
    let samples: Vec<Sample> = batch
        .pairs
        .iter()
        .zip(t_draws)
        .map(|((x0, x1), &t)| make_sample(x0, x1, t))
        .collect();
    model.loss(&samples)
}

fn make_sample(x0: &[f64], x1: &[f64], t: f64) -> Sample {
    let xt = x0
        .iter()
        .zip(x1)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    let target = x1.iter().zip(x0).map(|(b, a)| b - a).collect();
    Sample {
        xt,
        t,
        target,
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f32], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.step += 1;
        let b1c = 1.0 - cfg.beta1.powi(self.step as i32);
        let b2c = 1.0 - cfg.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / b1c;
            let v_hat = self.v[i] / b2c;
            let theta = params[i] as f64 - lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            params[i] = theta as f32;
        }
    }
}

/// How each epoch's batches are assembled.
enum BatchSource<'a> {
    /// x1 from the dataset, x0 redrawn from N(0, I) every batch.
    FreshNoise { x1s: &'a [Vec<f64>] },
    /// A fixed coupling; only the pairing order is reshuffled.
    Fixed { pairs: &'a [(Vec<f64>, Vec<f64>)] },
}

impl BatchSource<'_> {
    fn len(&self) -> usize {
        match self {
            BatchSource::FreshNoise { x1s } => x1s.len(),
            BatchSource::Fixed { pairs } => pairs.len(),
        }
    }

    fn sample(&self, index: usize, rng: &mut impl Rng, dim: usize) -> Sample {
        let t: f64 = rng.random();
        match self {
            BatchSource::FreshNoise { x1s } => {
                let x0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                make_sample(&x0, &x1s[index], t)
            }
            BatchSource::Fixed { pairs } => {
                let (x0, x1) = &pairs[index];
                make_sample(x0, x1, t)
            }
        }
    }
}

/// Shared training loop. Returns the parameters from the epoch with the
/// lowest mean loss, plus the per-step loss trace.
fn fit(
    mut model: FlowModel,
    source: BatchSource<'_>,
    cfg: &TrainConfig,
) -> Result<(FlowModel, Vec<(usize, f64)>)> {
    cfg.validate()?;
    let n = source.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let dim = model.state_dim();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * batches_per_epoch;
    let mut rng = derive_rng(cfg.seed, "flow-train", 0);
    let mut adam = Adam::new(model.params().len());
    let mut trace = Vec::with_capacity(total_steps);
    let mut best = (f64::INFINITY, model.params().to_vec());
    let mut indices: Vec<usize> = (0..n).collect();
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch_idx in indices.chunks(cfg.batch_size) {
            let samples: Vec<Sample> = batch_idx
                .iter()
                .map(|&i| source.sample(i, &mut rng, dim))
                .collect();
            let (loss, grad) = model.loss_and_grad(&samples)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let lr = cfg.lr_at(step, total_steps);
            adam.update(model.params_mut(), &grad, lr, cfg);
            trace.push((step, loss));
            epoch_loss += loss;
            step += 1;
        }
        epoch_loss /= batches_per_epoch as f64;
        if epoch_loss < best.0 {
            best = (epoch_loss, model.params().to_vec());
        }
    }
    let best_model = FlowModel::from_params(model.spec().clone(), best.1)?;
    Ok((best_model, trace))
}

/// Train a fresh field on dataset latents, drawing x0 from the standard
/// normal every batch.
pub fn train_flow(
    latents: &[Vec<f64>],
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<(FlowModel, Vec<(usize, f64)>)> {
    if latents.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for x in latents {
        if x.len() != spec.state_dim {
            return Err(Error::InvalidFlowInput(format!(
                "latent dim {} for state dim {}",
                x.len(),
                spec.state_dim
            )));
        }
    }
    let model = FlowModel::init(spec, cfg.seed)?;
    fit(model, BatchSource::FreshNoise { x1s: latents }, cfg)
}

/// Continue training an existing field on a fixed coupling (reflow and
/// retarget fine-tuning). The input model is untouched.
pub fn train_coupled(
    model: &FlowModel,
    batch: &CouplingBatch,
    cfg: &TrainConfig,
) -> Result<(FlowModel, Vec<(usize, f64)>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for (x0, _) in &batch.pairs {
        if x0.len() != model.state_dim() {
            return Err(Error::InvalidFlowInput(format!(
                "pair dim {} for state dim {}",
                x0.len(),
                model.state_dim()
            )));
        }
    }
    fit(
        model.clone(),
        BatchSource::Fixed {
            pairs: &batch.pairs,
        },
        cfg,
    )
}

/// Straighten a trained field: sample (z0, forward(z0)) couplings with the
/// current model, then retrain on that fixed coupling.
pub fn reflow(
    model: &FlowModel,
    n_pairs: usize,
    solver_steps: usize,
    cfg: &TrainConfig,
) -> Result<(FlowModel, Vec<(usize, f64)>)> {
    if n_pairs == 0 {
        return Err(Error::EmptyBatch);
    }
    let dim = model.state_dim();
    let mut rng = derive_rng(cfg.seed, "reflow-pairs", 0);
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let z0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let z1 = sample_forward(model, &z0, solver_steps)?.endpoint().to_vec();
        pairs.push((z0, z1));
    }
    train_coupled(model, &CouplingBatch::new(pairs)?, cfg)
}
