use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Gradients, Workspace};
use super::{AnnError, Mlp, Network, Topology};
use crate::record::{apply_scheme, fit_normalization, ClassScheme, Dataset, FeatureSet};
use crate::seed::derive_seed;

/// Minibatch SGD settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 200, minibatch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), AnnError> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(AnnError::InvalidConfig("learning rate must be finite and non-negative".into()));
        }
        if self.epochs == 0 || self.minibatch_size == 0 {
            return Err(AnnError::InvalidConfig("epochs and minibatch size must be positive".into()));
        }
        Ok(())
    }
}

/// Seed stream for weight initialization.
pub(crate) const INIT_STREAM: u64 = 1;
/// Seed stream for per-epoch shuffling.
pub(crate) const SHUFFLE_STREAM: u64 = 2;

pub fn train(
    data: &Dataset,
    fs: &FeatureSet,
    scheme: ClassScheme,
    topology: &Topology,
    cfg: &TrainConfig,
) -> Result<Network, AnnError> {
    run(data, fs, scheme, topology, cfg, false).map(|(net, _)| net)
}

/// Like [`train`], also returning the mean training loss after each epoch.
pub fn train_with_history(
    data: &Dataset,
    fs: &FeatureSet,
    scheme: ClassScheme,
    topology: &Topology,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<f64>), AnnError> {
    run(data, fs, scheme, topology, cfg, true)
}

fn run(
    data: &Dataset,
    fs: &FeatureSet,
    scheme: ClassScheme,
    topology: &Topology,
    cfg: &TrainConfig,
    record_history: bool,
) -> Result<(Network, Vec<f64>), AnnError> {
    cfg.validate()?;
    topology.validate()?;
    if topology.input_size != fs.len() {
        return Err(AnnError::DimensionMismatch { expected: fs.len(), got: topology.input_size });
    }
    if topology.output_size != scheme.n_classes() {
        return Err(AnnError::DimensionMismatch { expected: scheme.n_classes(), got: topology.output_size });
    }

    let data = apply_scheme(data, scheme)?;
    if data.is_empty() {
        return Err(AnnError::EmptyDataset);
    }
    for &class in scheme.classes() {
        if data.count(class) == 0 {
            return Err(AnnError::MissingClass(class));
        }
    }

    let normalization = fit_normalization(&data, fs)?;
    let inputs: Vec<Vec<f64>> = data.features(fs).iter().map(|v| normalization.apply(v)).collect::<Result<_, _>>()?;
    let targets: Vec<usize> =
        data.registers.iter().map(|r| scheme.class_index(r.label.expect("labeled")).expect("scheme applied")).collect();

    let mut mlp = Mlp::init(topology, derive_seed(cfg.seed, INIT_STREAM));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SHUFFLE_STREAM));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut ws = Workspace::new(&mlp);
    let mut grads = Gradients::zeros_like(&mlp);
    let mut history = Vec::with_capacity(if record_history { cfg.epochs } else { 0 });

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.minibatch_size) {
            grads.clear();
            for &i in batch {
                mlp.accumulate_gradient(&inputs[i], targets[i], &mut ws, &mut grads);
            }
            mlp.apply_update(&grads, cfg.learning_rate / batch.len() as f64);
        }
        if record_history {
            let total: f64 = inputs.iter().zip(&targets).map(|(x, &t)| mlp.loss_with(x, t, &mut ws)).sum();
            history.push(total / inputs.len() as f64);
        }
    }

    Ok((Network::new(mlp, fs.clone(), scheme, normalization)?, history))
}
