//! Dense feed-forward networks with exact reverse-mode gradients, an Adam
//! optimizer and a self-describing checkpoint byte format. Sized for the
//! small policy/critic heads used here; everything is `f64` and
//! deterministic under a seeded [`Rng`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{pow, sqrt};

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    /// Checkpoint bytes are truncated or carry a wrong magic/version.
    BadCheckpoint(&'static str),
    /// Loaded layer dimensions do not chain or do not match expectations.
    ShapeMismatch,
    /// A gradient or parameter stopped being finite.
    NonFinite,
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::BadCheckpoint(msg) => write!(f, "bad checkpoint: {msg}"),
            NetError::ShapeMismatch => write!(f, "layer dimensions do not match"),
            NetError::NonFinite => write!(f, "non-finite value in training update"),
        }
    }
}

impl core::error::Error for NetError {}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.biases[row];
            for (wi, xi) in w.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Fully-connected network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients plus the gradient w.r.t. the input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Gradients {
    fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            input: vec![0.0; net.in_dim()],
        }
    }

    /// Accumulate `other`, scaled.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(other.weights.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(other.biases.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
    }

    pub fn zeroed(net: &DenseNet) -> Self {
        Self::zeros_like(net)
    }
}

impl DenseNet {
    /// He-uniform init on hidden layers, small-uniform (±1e-3) output layer
    /// so the initial policy is near-uniform over the masked support.
    pub fn new(dims: &[usize], rng: &mut Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (idx, pair) in dims.windows(2).enumerate() {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let is_output = idx == dims.len() - 2;
            let limit = if is_output {
                1e-3
            } else {
                sqrt(6.0 / in_dim as f64)
            };
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.range_f64(-limit, limit))
                .collect();
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                biases: vec![0.0; out_dim],
            });
        }
        DenseNet { layers }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.in_dim());
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    /// Forward pass; `x.len()` must equal the input dimension.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim(), "input dimension mismatch");
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if idx != last {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Exact reverse-mode gradients of the scalar whose output gradient is
    /// `upstream`, evaluated at input `x`.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Gradients {
        assert_eq!(x.len(), self.in_dim(), "input dimension mismatch");
        assert_eq!(upstream.len(), self.out_dim(), "upstream dimension mismatch");
        // forward, caching post-activation values per layer
        let last = self.layers.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let mut buf = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.affine(activations.last().expect("non-empty"), &mut buf);
            if idx != last {
                for v in buf.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(buf.clone());
        }

        let mut grads = Gradients::zeros_like(self);
        let mut delta = upstream.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            // ReLU mask for hidden layers: a post-activation of zero means
            // the unit was clamped (ties at exactly zero carry no gradient).
            if idx != last {
                for (d, &a) in delta.iter_mut().zip(activations[idx + 1].iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &activations[idx];
            let gw = &mut grads.weights[idx];
            for row in 0..layer.out_dim {
                let d = delta[row];
                grads.biases[idx][row] = d;
                if d != 0.0 {
                    let base = row * layer.in_dim;
                    for (col, &xi) in input.iter().enumerate() {
                        gw[base + col] = d * xi;
                    }
                }
            }
            // propagate to the layer input
            let mut prev_delta = vec![0.0; layer.in_dim];
            for row in 0..layer.out_dim {
                let d = delta[row];
                if d != 0.0 {
                    let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                    for (pd, &wi) in prev_delta.iter_mut().zip(w.iter()) {
                        *pd += d * wi;
                    }
                }
            }
            delta = prev_delta;
        }
        grads.input = delta;
        grads
    }

    /// Interpolate towards `online`: `self ← τ·online + (1−τ)·self`.
    pub fn soft_update_from(&mut self, online: &DenseNet, tau: f64) {
        assert_eq!(self.dims(), online.dims(), "shape mismatch in soft update");
        for (t, o) in self.layers.iter_mut().zip(online.layers.iter()) {
            for (tw, ow) in t.weights.iter_mut().zip(o.weights.iter()) {
                *tw = tau * ow + (1.0 - tau) * *tw;
            }
            for (tb, ob) in t.biases.iter_mut().zip(o.biases.iter()) {
                *tb = tau * ob + (1.0 - tau) * *tb;
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Read one parameter by flat index (layer by layer, weights then
    /// biases). Used by gradient-checking harnesses.
    pub fn get_param(&self, index: usize) -> f64 {
        let mut i = index;
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Write one parameter by flat index; see [`DenseNet::get_param`].
    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in self.layers.iter_mut() {
            if i < layer.weights.len() {
                layer.weights[i] = value;
                return;
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                layer.biases[i] = value;
                return;
            }
            i -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Gradient for the parameter at `index` out of a [`Gradients`] set,
    /// using the same flat ordering as [`DenseNet::get_param`].
    pub fn flat_gradient(grads: &Gradients, index: usize) -> f64 {
        let mut i = index;
        for (w, b) in grads.weights.iter().zip(grads.biases.iter()) {
            if i < w.len() {
                return w[i];
            }
            i -= w.len();
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("parameter index {index} out of range");
    }
}

// --- checkpoint byte format -------------------------------------------------
//
//   magic "CBN1" | u32 layer count | per layer: u32 in, u32 out |
//   per layer: weights then biases, little-endian f64

const MAGIC: &[u8; 4] = b"CBN1";

impl DenseNet {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.param_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
            out.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        }
        for layer in &self.layers {
            for w in &layer.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
            for b in &layer.biases {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], NetError> {
            let end = pos.checked_add(n).ok_or(NetError::BadCheckpoint("overflow"))?;
            if end > bytes.len() {
                return Err(NetError::BadCheckpoint("truncated"));
            }
            let slice = &bytes[*pos..end];
            *pos = end;
            Ok(slice)
        };
        if take(&mut pos, 4)? != MAGIC {
            return Err(NetError::BadCheckpoint("wrong magic"));
        }
        let n_layers = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        if n_layers == 0 || n_layers > 64 {
            return Err(NetError::BadCheckpoint("implausible layer count"));
        }
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
            let out_dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
            if in_dim == 0 || out_dim == 0 {
                return Err(NetError::BadCheckpoint("zero dimension"));
            }
            shapes.push((in_dim, out_dim));
        }
        for pair in shapes.windows(2) {
            if pair[0].1 != pair[1].0 {
                return Err(NetError::ShapeMismatch);
            }
        }
        let mut layers = Vec::with_capacity(n_layers);
        for &(in_dim, out_dim) in &shapes {
            let mut weights = Vec::with_capacity(in_dim * out_dim);
            for _ in 0..in_dim * out_dim {
                weights.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            let mut biases = Vec::with_capacity(out_dim);
            for _ in 0..out_dim {
                biases.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                biases,
            });
        }
        if pos != bytes.len() {
            return Err(NetError::BadCheckpoint("trailing bytes"));
        }
        Ok(DenseNet { layers })
    }

    /// Guard for loading into a known architecture.
    pub fn expect_dims(&self, dims: &[usize]) -> Result<(), NetError> {
        if self.dims() == dims {
            Ok(())
        } else {
            Err(NetError::ShapeMismatch)
        }
    }
}

/// Adam with bias correction (β₁ = 0.9, β₂ = 0.999, ε = 1e-8), shaped to
/// one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &DenseNet, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            v_biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. Fails on non-finite gradients without
    /// touching the parameters.
    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NetError> {
        let finite = grads
            .weights
            .iter()
            .flatten()
            .chain(grads.biases.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(NetError::NonFinite);
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - pow(self.beta1, f64::from(t));
        let bc2 = 1.0 - pow(self.beta2, f64::from(t));
        for (idx, layer) in net.layers.iter_mut().enumerate() {
            update_slice(
                &mut layer.weights,
                &grads.weights[idx],
                &mut self.m_weights[idx],
                &mut self.v_weights[idx],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
            update_slice(
                &mut layer.biases,
                &grads.biases[idx],
                &mut self.m_biases[idx],
                &mut self.v_biases[idx],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (sqrt(v_hat) + eps);
    }
}

/// Adam for a single scalar (the entropy temperature's log).
#[derive(Debug, Clone)]
pub struct ScalarAdam {
    pub learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m: f64,
    v: f64,
}

impl ScalarAdam {
    pub fn new(learning_rate: f64) -> Self {
        ScalarAdam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: 0.0,
            v: 0.0,
        }
    }

    pub fn apply(&mut self, param: &mut f64, grad: f64) -> Result<(), NetError> {
        if !grad.is_finite() {
            return Err(NetError::NonFinite);
        }
        self.step += 1;
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad;
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad;
        let bc1 = 1.0 - pow(self.beta1, self.step as f64);
        let bc2 = 1.0 - pow(self.beta2, self.step as f64);
        *param -= self.learning_rate * (self.m / bc1) / (sqrt(self.v / bc2) + self.epsilon);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_net(w: f64, b: f64) -> DenseNet {
        DenseNet {
            layers: vec![Layer {
                in_dim: 1,
                out_dim: 1,
                weights: vec![w],
                biases: vec![b],
            }],
        }
    }

    #[test]
    fn zero_parameters_zero_output() {
        let mut rng = Rng::new(1);
        let mut net = DenseNet::new(&[4, 8, 3], &mut rng);
        for layer in net.layers.iter_mut() {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let out = net.forward(&[1.0, -2.0, 3.0, 0.5]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_affine_layer_by_hand() {
        let net = tiny_net(2.0, 1.0);
        assert_eq!(net.forward(&[3.0]), vec![7.0]);
    }

    #[test]
    fn relu_blocks_negative_preactivations() {
        // one hidden unit with weight -1: negative input contributes nothing
        let net = DenseNet {
            layers: vec![
                Layer {
                    in_dim: 1,
                    out_dim: 1,
                    weights: vec![-1.0],
                    biases: vec![0.0],
                },
                Layer {
                    in_dim: 1,
                    out_dim: 1,
                    weights: vec![5.0],
                    biases: vec![0.0],
                },
            ],
        };
        assert_eq!(net.forward(&[2.0]), vec![0.0]);
        assert_eq!(net.forward(&[-2.0]), vec![10.0]);
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let mut rng = Rng::new(2);
        let net = DenseNet::new(&[5, 6, 4], &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.range_f64(-1.0, 1.0)).collect();
        let grads = net.backward(&x, &[0.0; 4]);
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.input.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn hand_gradient_single_layer() {
        let net = tiny_net(2.0, 1.0);
        let grads = net.backward(&[3.0], &[1.0]);
        assert_eq!(grads.weights[0], vec![3.0]); // dL/dw = x
        assert_eq!(grads.biases[0], vec![1.0]);
        assert_eq!(grads.input, vec![2.0]); // dL/dx = w
    }

    /// Scalar loss for gradient checking: dot(upstream, forward(x)).
    fn probe_loss(net: &DenseNet, x: &[f64], upstream: &[f64]) -> f64 {
        net.forward(x)
            .iter()
            .zip(upstream.iter())
            .map(|(o, u)| o * u)
            .sum()
    }

    fn finite_difference_check(dims: &[usize], seed: u64) -> f64 {
        let mut rng = Rng::new(seed);
        let mut net = DenseNet::new(dims, &mut rng);
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.range_f64(-1.0, 1.0)).collect();
        let upstream: Vec<f64> = (0..*dims.last().unwrap())
            .map(|_| rng.range_f64(-1.0, 1.0))
            .collect();
        let analytic = net.backward(&x, &upstream);
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for layer in 0..net.layers.len() {
            for kind in 0..2 {
                let len = if kind == 0 {
                    net.layers[layer].weights.len()
                } else {
                    net.layers[layer].biases.len()
                };
                for i in 0..len {
                    let read = |net: &DenseNet| {
                        if kind == 0 {
                            net.layers[layer].weights[i]
                        } else {
                            net.layers[layer].biases[i]
                        }
                    };
                    let orig = read(&net);
                    let write = |net: &mut DenseNet, v: f64| {
                        if kind == 0 {
                            net.layers[layer].weights[i] = v;
                        } else {
                            net.layers[layer].biases[i] = v;
                        }
                    };
                    write(&mut net, orig + h);
                    let plus = probe_loss(&net, &x, &upstream);
                    write(&mut net, orig - h);
                    let minus = probe_loss(&net, &x, &upstream);
                    write(&mut net, orig);
                    let fd = (plus - minus) / (2.0 * h);
                    let an = if kind == 0 {
                        analytic.weights[layer][i]
                    } else {
                        analytic.biases[layer][i]
                    };
                    let denom = an.abs().max(fd.abs()).max(1e-3);
                    max_rel = max_rel.max((an - fd).abs() / denom);
                }
            }
        }
        max_rel
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (i, dims) in [
            &[3usize, 4, 2][..],
            &[6, 8, 8, 4],
            &[27, 64, 64, 25],
        ]
        .iter()
        .enumerate()
        {
            let max_rel = finite_difference_check(dims, 100 + i as u64);
            assert!(max_rel < 1e-4, "dims {dims:?}: max rel err {max_rel}");
        }
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut rng = Rng::new(5);
        let mut net = DenseNet::new(&[3, 4, 2], &mut rng);
        let before = net.clone();
        let mut opt = Adam::new(&net, 0.01);
        let grads = Gradients::zeroed(&net);
        opt.apply(&mut net, &grads).unwrap();
        assert_eq!(net, before);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn adam_constant_gradient_moves_by_lr() {
        let mut net = tiny_net(1.0, 0.0);
        let mut opt = Adam::new(&net, 0.001);
        let mut grads = Gradients::zeroed(&net);
        grads.weights[0][0] = 1.0;
        let mut prev = 1.0;
        for step in 0..100 {
            opt.apply(&mut net, &grads).unwrap();
            let cur = net.layers[0].weights[0];
            assert!(cur < prev, "monotone decrease");
            if step > 10 {
                let delta = prev - cur;
                assert!((delta - 0.001).abs() < 1e-4, "step size {delta}");
            }
            prev = cur;
        }
        assert_eq!(opt.step_count(), 100);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut net = tiny_net(1.0, 0.0);
        let before = net.clone();
        let mut opt = Adam::new(&net, 0.001);
        let mut grads = Gradients::zeroed(&net);
        grads.weights[0][0] = f64::NAN;
        assert_eq!(opt.apply(&mut net, &grads).unwrap_err(), NetError::NonFinite);
        assert_eq!(net, before);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = Rng::new(9);
        for dims in [&[27usize, 64, 64, 25][..], &[6, 16, 4]] {
            let net = DenseNet::new(dims, &mut rng);
            let bytes = net.to_bytes();
            let restored = DenseNet::from_bytes(&bytes).unwrap();
            assert_eq!(net, restored);
        }
    }

    #[test]
    fn checkpoint_rejects_truncation_and_garbage() {
        let mut rng = Rng::new(10);
        let net = DenseNet::new(&[4, 8, 3], &mut rng);
        let bytes = net.to_bytes();
        assert!(DenseNet::from_bytes(&bytes[..bytes.len() - 5]).is_err());
        assert!(DenseNet::from_bytes(&bytes[..3]).is_err());
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(DenseNet::from_bytes(&wrong_magic).is_err());
    }

    #[test]
    fn checkpoint_shape_guard() {
        let mut rng = Rng::new(11);
        let net = DenseNet::new(&[27, 64, 64, 25], &mut rng);
        let restored = DenseNet::from_bytes(&net.to_bytes()).unwrap();
        assert!(restored.expect_dims(&[27, 64, 64, 25]).is_ok());
        assert_eq!(
            restored.expect_dims(&[27, 32, 25]).unwrap_err(),
            NetError::ShapeMismatch
        );
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let mut a = Rng::new(77);
        let mut b = Rng::new(77);
        let n1 = DenseNet::new(&[27, 64, 64, 25], &mut a);
        let n2 = DenseNet::new(&[27, 64, 64, 25], &mut b);
        assert_eq!(n1, n2);
    }
}
