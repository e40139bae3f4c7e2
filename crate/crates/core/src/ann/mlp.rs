use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnnError, Topology};

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in self.weights.chunks_exact(self.inputs).enumerate() {
            out[o] = self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Per-parameter gradient, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self { layers: mlp.layers.iter().map(|l| DenseLayer::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    /// Same order as [`Mlp::parameters_mut`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect()
    }
}

/// Sigmoid hidden layers followed by a softmax output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax, in place.
fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Reusable buffers for forward/backward passes.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    /// activations[0] is the input; the last entry holds logits, then probabilities.
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(mlp: &Mlp) -> Self {
        let mut activations = vec![vec![0.0; mlp.layers[0].inputs]];
        activations.extend(mlp.layers.iter().map(|l| vec![0.0; l.outputs]));
        let deltas = mlp.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        Self { activations, deltas }
    }
}

impl Mlp {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(topology: &Topology, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = topology.sizes();
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                let mut layer = DenseLayer::zeros(inputs, outputs);
                for v in &mut layer.weights {
                    *v = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, AnnError> {
        if layers.is_empty() {
            return Err(AnnError::InvalidTopology("at least one layer is required".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs || l.inputs == 0 || l.outputs == 0
            {
                return Err(AnnError::InvalidTopology(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(AnnError::InvalidTopology(format!("layer {i} input does not match previous output")));
            }
        }
        let mlp = Self { layers };
        mlp.topology().validate()?;
        Ok(mlp)
    }

    pub fn topology(&self) -> Topology {
        Topology {
            input_size: self.layers[0].inputs,
            hidden_sizes: self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect(),
            output_size: self.layers[self.layers.len() - 1].outputs,
        }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    /// Weights then biases, layer by layer.
    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    fn check_input(&self, x: &[f64]) -> Result<(), AnnError> {
        if x.len() != self.input_size() {
            return Err(AnnError::DimensionMismatch { expected: self.input_size(), got: x.len() });
        }
        Ok(())
    }

    /// Runs the hidden layers and the output affine map; leaves logits in
    /// the last activation buffer.
    fn forward_logits(&self, x: &[f64], ws: &mut Workspace) {
        ws.activations[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (prev, next) = ws.activations.split_at_mut(i + 1);
            let out = &mut next[0];
            layer.affine(&prev[i], out);
            if i < last {
                out.iter_mut().for_each(|v| *v = sigmoid(*v));
            }
        }
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, AnnError> {
        self.check_input(x)?;
        let mut ws = Workspace::new(self);
        self.forward_logits(x, &mut ws);
        let mut p = ws.activations.pop().expect("output layer");
        softmax(&mut p);
        Ok(p)
    }

    /// Cross-entropy of the true class `target`.
    pub fn loss(&self, x: &[f64], target: usize) -> Result<f64, AnnError> {
        self.check_input(x)?;
        let mut ws = Workspace::new(self);
        self.forward_logits(x, &mut ws);
        let z = ws.activations.last().expect("output layer");
        Ok(log_sum_exp(z) - z[target])
    }

    pub(crate) fn loss_with(&self, x: &[f64], target: usize, ws: &mut Workspace) -> f64 {
        self.forward_logits(x, ws);
        let z = ws.activations.last().expect("output layer");
        log_sum_exp(z) - z[target]
    }

    /// Backpropagates one example, adding its gradient into `grads`.
    /// Returns the example's loss.
    pub(crate) fn accumulate_gradient(
        &self,
        x: &[f64],
        target: usize,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> f64 {
        self.forward_logits(x, ws);
        let last = self.layers.len() - 1;
        let loss = {
            let z = &mut ws.activations[last + 1];
            let loss = log_sum_exp(z) - z[target];
            softmax(z);
            loss
        };

        // softmax + cross-entropy: dL/dz = p - onehot
        let out_delta = &mut ws.deltas[last];
        out_delta.copy_from_slice(&ws.activations[last + 1]);
        out_delta[target] -= 1.0;

        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            let input = &ws.activations[i];
            let (lower, upper) = ws.deltas.split_at_mut(i);
            let delta = &upper[0];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, &a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if i > 0 {
                let prev = &mut lower[i - 1];
                prev.fill(0.0);
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (pd, &w) in prev.iter_mut().zip(row) {
                        *pd += w * d;
                    }
                }
                for (pd, &a) in prev.iter_mut().zip(input) {
                    *pd *= a * (1.0 - a);
                }
            }
        }
        loss
    }

    /// Loss and full gradient for a single example.
    pub fn loss_and_gradient(&self, x: &[f64], target: usize) -> Result<(f64, Gradients), AnnError> {
        self.check_input(x)?;
        if target >= self.topology().output_size {
            return Err(AnnError::DimensionMismatch { expected: self.topology().output_size, got: target + 1 });
        }
        let mut ws = Workspace::new(self);
        let mut grads = Gradients::zeros_like(self);
        let loss = self.accumulate_gradient(x, target, &mut ws, &mut grads);
        Ok((loss, grads))
    }

    /// `w -= step * g` for every parameter.
    pub(crate) fn apply_update(&mut self, grads: &Gradients, step: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= step * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= step * gb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_shapes_follow_topology() {
        let mlp = Mlp::init(&Topology::new(10, vec![16, 8], 3).unwrap(), 3);
        let shapes: Vec<_> = mlp.layers.iter().map(|l| (l.outputs, l.inputs)).collect();
        assert_eq!(shapes, vec![(16, 10), (8, 16), (3, 8)]);
        let mlp7 = Mlp::init(&Topology::new(7, vec![16, 8], 3).unwrap(), 3);
        assert_eq!((mlp7.layers[0].outputs, mlp7.layers[0].inputs), (16, 7));
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let topo = Topology::new(7, vec![16, 8], 3).unwrap();
        let a = Mlp::init(&topo, 42);
        assert_eq!(a, Mlp::init(&topo, 42));
        assert_ne!(a, Mlp::init(&topo, 43));
        for l in &a.layers {
            let limit = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
            assert!(l.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn from_layers_rejects_bad_shapes() {
        let good = DenseLayer::zeros(3, 2);
        let mut bad = DenseLayer::zeros(3, 2);
        bad.weights.pop();
        assert!(Mlp::from_layers(vec![good.clone()]).is_ok());
        assert!(Mlp::from_layers(vec![bad]).is_err());
        assert!(Mlp::from_layers(vec![DenseLayer::zeros(3, 4), DenseLayer::zeros(5, 2)]).is_err());
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let mut mlp = Mlp::init(&Topology::new(2, vec![3], 3).unwrap(), 0);
        for p in mlp.parameters_mut() {
            *p *= 1e4;
        }
        let p = mlp.forward(&[1.0, 1.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!(mlp.loss(&[1.0, 1.0], 2).unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn softmax_outputs_sum_to_one(seed in any::<u64>(), x in prop::collection::vec(0.0..=1.0f64, 10)) {
            for (n_in, out) in [(10usize, 3usize), (7, 3), (4, 2)] {
                let mlp = Mlp::init(&Topology::new(n_in, vec![16, 8], out).unwrap(), seed);
                let p = mlp.forward(&x[..n_in]).unwrap();
                prop_assert!(p.iter().all(|v| v.is_finite() && *v > 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
