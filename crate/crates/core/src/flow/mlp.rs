//! Fully connected velocity field v(x, t) on [x || time embedding].
//!
//! Parameters are stored as f32 (the checkpoint precision); all arithmetic
//! runs in f64 so analytic gradients survive a central-difference check.
//! The final layer is zero-initialized, making the freshly built field
//! identically zero.

use crate::error::{Error, Result};
use crate::util::{derive_rng, thread_pool};
use rand::Rng;
use rayon::prelude::*;

/// Geometric sinusoidal time-embedding frequencies span [1, this].
const TIME_FREQ_MAX: f64 = 1000.0;
/// Fixed chunk count for batch-parallel gradients; reductions run in chunk
/// order, so results are independent of the worker count.
const GRAD_CHUNKS: usize = 8;

/// Architecture: state dimension, hidden widths, and the number of
/// sinusoidal frequency pairs appended to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub state_dim: usize,
    pub hidden: Vec<usize>,
    pub time_freqs: usize,
}

impl MlpSpec {
    /// Default field for a given state dimension: 4 hidden layers of 512
    /// with 16 frequency pairs.
    pub fn new(state_dim: usize) -> Self {
        Self {
            state_dim,
            hidden: vec![512; 4],
            time_freqs: 16,
        }
    }

    pub fn with_hidden(state_dim: usize, hidden: Vec<usize>) -> Self {
        Self {
            state_dim,
            hidden,
            time_freqs: 16,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.state_dim + 2 * self.time_freqs
    }

    /// (fan_in, fan_out) of every linear layer in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim();
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.state_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 {
            return Err(Error::InvalidFlowInput("state_dim is zero".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidFlowInput("zero-width hidden layer".into()));
        }
        if self.time_freqs == 0 {
            return Err(Error::InvalidFlowInput("time_freqs is zero".into()));
        }
        Ok(())
    }
}

/// One training sample: interpolated state, its time, and the displacement
/// target the field should predict there.
#[derive(Debug, Clone)]
pub struct Sample {
    pub xt: Vec<f64>,
    pub t: f64,
    pub target: Vec<f64>,
}

/// The velocity field. Parameter layout (also the checkpoint payload
/// order): for each layer, weights row-major (out x in), then biases.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    spec: MlpSpec,
    params: Vec<f32>,
}

impl FlowModel {
    /// Seeded Xavier-uniform init for hidden layers; the final layer is
    /// zeroed so v = 0 everywhere at the start.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let mut rng = derive_rng(seed, "flow-init", 0);
        let mut params = Vec::with_capacity(spec.param_count());
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let last = l == dims.len() - 1;
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let w = if last {
                    0.0
                } else {
                    (rng.random::<f64>() * 2.0 - 1.0) * bound
                };
                params.push(w as f32);
            }
            params.extend(std::iter::repeat(0.0f32).take(fan_out));
        }
        Ok(Self { spec, params })
    }

    /// Rebuild a model from raw parameters (checkpoint load, tests).
    pub fn from_params(spec: MlpSpec, params: Vec<f32>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::InvalidFlowInput(format!(
                "expected {} parameters, got {}",
                spec.param_count(),
                params.len()
            )));
        }
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidFlowInput("non-finite parameter".into()));
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn state_dim(&self) -> usize {
        self.spec.state_dim
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    fn params_f64(&self) -> Vec<f64> {
        self.params.iter().map(|&p| p as f64).collect()
    }

    fn embed(&self, x: &[f64], t: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        let freqs = self.spec.time_freqs;
        for k in 0..freqs {
            let omega = if freqs > 1 {
                TIME_FREQ_MAX.powf(k as f64 / (freqs - 1) as f64)
            } else {
                1.0
            };
            out.push((omega * t).sin());
            out.push((omega * t).cos());
        }
    }

    /// v(x, t) without precondition checks; used by solvers which guard
    /// state finiteness themselves.
    pub(crate) fn velocity_raw(&self, x: &[f64], t: f64) -> Vec<f64> {
        let params = self.params_f64();
        let mut input = Vec::with_capacity(self.spec.input_dim());
        self.embed(x, t, &mut input);
        let mut act = input;
        let dims = self.spec.layer_dims();
        let mut offset = 0usize;
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let w = &params[offset..offset + fan_in * fan_out];
            let b = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let mut next = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut s = b[o];
                for i in 0..fan_in {
                    s += row[i] * act[i];
                }
                next[o] = if l + 1 < dims.len() { silu(s) } else { s };
            }
            act = next;
        }
        act
    }

    /// Mean over samples of || target - v(xt, t) ||^2.
    pub fn loss(&self, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let per: Vec<f64> = thread_pool().install(|| {
            samples
                .par_iter()
                .map(|s| {
                    let v = self.velocity_raw(&s.xt, s.t);
                    v.iter()
                        .zip(&s.target)
                        .map(|(a, b)| (b - a) * (b - a))
                        .sum::<f64>()
                })
                .collect()
        });
        Ok(per.iter().sum::<f64>() / samples.len() as f64)
    }

    /// Loss plus its analytic gradient w.r.t. every parameter, in the
    /// parameter layout order. Deterministic for any worker count: samples
    /// are split into a fixed number of chunks, each accumulated serially,
    /// and chunks are combined in order.
    pub fn loss_and_grad(&self, samples: &[Sample]) -> Result<(f64, Vec<f64>)> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let params = self.params_f64();
        let chunk_size = samples.len().div_ceil(GRAD_CHUNKS);
        let chunks: Vec<&[Sample]> = samples.chunks(chunk_size).collect();
        let results: Vec<(f64, Vec<f64>)> = thread_pool().install(|| {
            chunks
                .par_iter()
                .map(|chunk| {
                    let mut grad = vec![0.0f64; params.len()];
                    let mut loss = 0.0;
                    let mut ws = BackpropWorkspace::new(&self.spec);
                    for s in *chunk {
                        loss += self.backprop_sample(&params, s, &mut grad, &mut ws);
                    }
                    (loss, grad)
                })
                .collect()
        });
        let n = samples.len() as f64;
        let mut total_loss = 0.0;
        let mut total_grad = vec![0.0f64; params.len()];
        for (loss, grad) in &results {
            total_loss += loss;
            for (g, d) in total_grad.iter_mut().zip(grad) {
                *g += d;
            }
        }
        for g in &mut total_grad {
            *g /= n;
        }
        Ok((total_loss / n, total_grad))
    }

    /// One sample's squared error; accumulates its unnormalized gradient.
    fn backprop_sample(
        &self,
        params: &[f64],
        sample: &Sample,
        grad: &mut [f64],
        ws: &mut BackpropWorkspace,
    ) -> f64 {
        let dims = self.spec.layer_dims();
        self.embed(&sample.xt, sample.t, &mut ws.acts[0]);

        // forward, keeping pre-activations
        let mut offset = 0usize;
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let w = &params[offset..offset + fan_in * fan_out];
            let b = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let act = &head[l];
            let next = &mut tail[0];
            next.resize(fan_out, 0.0);
            let z = &mut ws.zs[l];
            z.resize(fan_out, 0.0);
            let last = l + 1 == dims.len();
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut s = b[o];
                for i in 0..fan_in {
                    s += row[i] * act[i];
                }
                z[o] = s;
                next[o] = if last { s } else { silu(s) };
            }
        }

        let out = &ws.acts[dims.len()];
        let mut loss = 0.0;
        ws.delta.resize(out.len(), 0.0);
        for o in 0..out.len() {
            let err = out[o] - sample.target[o];
            loss += err * err;
            ws.delta[o] = 2.0 * err;
        }

        // backward
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0usize;
        for &(fan_in, fan_out) in &dims {
            offsets.push(acc);
            acc += fan_in * fan_out + fan_out;
        }
        for l in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[l];
            let w_off = offsets[l];
            let act = &ws.acts[l];
            for o in 0..fan_out {
                let d = ws.delta[o];
                let g_row = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                for i in 0..fan_in {
                    g_row[i] += d * act[i];
                }
                grad[w_off + fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let w = &params[w_off..w_off + fan_in * fan_out];
                ws.prev_delta.clear();
                ws.prev_delta.resize(fan_in, 0.0);
                for o in 0..fan_out {
                    let d = ws.delta[o];
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    for i in 0..fan_in {
                        ws.prev_delta[i] += row[i] * d;
                    }
                }
                let z_prev = &ws.zs[l - 1];
                for i in 0..fan_in {
                    ws.prev_delta[i] *= silu_deriv(z_prev[i]);
                }
                std::mem::swap(&mut ws.delta, &mut ws.prev_delta);
            }
        }
        loss
    }
}

struct BackpropWorkspace {
    acts: Vec<Vec<f64>>,
    zs: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev_delta: Vec<f64>,
}

impl BackpropWorkspace {
    fn new(spec: &MlpSpec) -> Self {
        let layers = spec.layer_dims().len();
        Self {
            acts: vec![Vec::new(); layers + 1],
            zs: vec![Vec::new(); layers],
            delta: Vec::new(),
            prev_delta: Vec::new(),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_deriv(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Evaluate the field with full precondition checks.
pub fn velocity_eval(model: &FlowModel, x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidFlowInput(format!("t {t} outside [0,1]")));
    }
    if x.len() != model.state_dim() {
        return Err(Error::InvalidFlowInput(format!(
            "state length {} for dimension {}",
            x.len(),
            model.state_dim()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidFlowInput("non-finite state".into()));
    }
    Ok(model.velocity_raw(x, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> MlpSpec {
        MlpSpec {
            state_dim: 3,
            hidden: vec![8, 6],
            time_freqs: 2,
        }
    }

    /// Random parameters everywhere (the default zero final layer would
    /// make hidden-layer gradients vanish).
    fn random_model(seed: u64) -> FlowModel {
        let spec = small_spec();
        let mut rng = derive_rng(seed, "mlp-test", 0);
        let params: Vec<f32> = (0..spec.param_count())
            .map(|_| ((rng.random::<f64>() * 2.0 - 1.0) * 0.5) as f32)
            .collect();
        FlowModel::from_params(spec, params).unwrap()
    }

    #[test]
    fn fresh_model_is_the_zero_field() {
        let model = FlowModel::init(small_spec(), 5).unwrap();
        let v = velocity_eval(&model, &[0.3, -1.2, 0.7], 0.4).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let model = random_model(6);
        let a = velocity_eval(&model, &[0.1, 0.2, 0.3], 0.5).unwrap();
        let b = velocity_eval(&model, &[0.1, 0.2, 0.3], 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn velocity_eval_validates_inputs() {
        let model = random_model(7);
        assert!(velocity_eval(&model, &[0.0; 3], -0.1).is_err());
        assert!(velocity_eval(&model, &[0.0; 3], 1.1).is_err());
        assert!(velocity_eval(&model, &[0.0; 2], 0.5).is_err());
        assert!(velocity_eval(&model, &[f64::NAN, 0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let model = random_model(8);
        let mut rng = derive_rng(9, "mlp-test", 1);
        let samples: Vec<Sample> = (0..4)
            .map(|_| Sample {
                xt: (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                t: rng.random::<f64>(),
                target: (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
            })
            .collect();
        let (_, grad) = model.loss_and_grad(&samples).unwrap();

        let dims = model.spec().layer_dims();
        let mut layer_offsets = vec![0usize];
        for &(i, o) in &dims {
            layer_offsets.push(layer_offsets.last().unwrap() + i * o + o);
        }
        let eps = 1e-4f32;
        // 10 random coordinates per layer (weights and biases both land in
        // the range)
        for l in 0..dims.len() {
            let lo = layer_offsets[l];
            let hi = layer_offsets[l + 1];
            for _ in 0..10 {
                let idx = lo + (rng.random::<u64>() as usize) % (hi - lo);
                let mut plus = model.clone();
                plus.params_mut()[idx] += eps;
                let mut minus = model.clone();
                minus.params_mut()[idx] -= eps;
                // use the exact realized f32 step in the quotient
                let h = plus.params()[idx] as f64 - minus.params()[idx] as f64;
                let fd =
                    (plus.loss(&samples).unwrap() - minus.loss(&samples).unwrap()) / h;
                let g = grad[idx];
                let rel = (fd - g).abs() / g.abs().max(fd.abs()).max(1e-8);
                assert!(
                    rel < 1e-3,
                    "layer {l} param {idx}: analytic {g} vs fd {fd} (rel {rel:.2e})"
                );
            }
        }
    }

    #[test]
    fn loss_and_grad_rejects_empty_batch() {
        let model = random_model(10);
        assert!(matches!(model.loss(&[]), Err(Error::EmptyBatch)));
        assert!(matches!(model.loss_and_grad(&[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn grad_is_independent_of_chunking() {
        // 1 sample vs many samples exercising multiple chunks must agree
        // with a serial recomputation
        let model = random_model(11);
        let mut rng = derive_rng(12, "mlp-test", 2);
        let samples: Vec<Sample> = (0..33)
            .map(|_| Sample {
                xt: (0..3).map(|_| rng.random::<f64>() - 0.5).collect(),
                t: rng.random::<f64>(),
                target: (0..3).map(|_| rng.random::<f64>() - 0.5).collect(),
            })
            .collect();
        let (loss_par, grad_par) = model.loss_and_grad(&samples).unwrap();
        // serial oracle: chunk by chunk, same order
        let mut loss_ser = 0.0;
        let mut grad_ser = vec![0.0; grad_par.len()];
        for s in &samples {
            let (l, g) = model.loss_and_grad(std::slice::from_ref(s)).unwrap();
            loss_ser += l;
            for (a, b) in grad_ser.iter_mut().zip(&g) {
                *a += b;
            }
        }
        loss_ser /= samples.len() as f64;
        for g in &mut grad_ser {
            *g /= samples.len() as f64;
        }
        assert!((loss_par - loss_ser).abs() < 1e-12);
        for (a, b) in grad_par.iter().zip(&grad_ser) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn param_count_matches_layout() {
        let spec = small_spec();
        // input = 3 + 4 = 7; layers 7->8, 8->6, 6->3
        assert_eq!(
            spec.param_count(),
            (7 * 8 + 8) + (8 * 6 + 6) + (6 * 3 + 3)
        );
        let model = FlowModel::init(spec, 1).unwrap();
        assert_eq!(model.params().len(), model.spec().param_count());
    }
}
