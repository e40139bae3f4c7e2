//! Small fully connected feedforward classifier: logistic-sigmoid hidden
//! layers, softmax output, cross-entropy loss, minibatch SGD.

mod io;
mod mlp;
mod train;

use thiserror::Error;

use crate::record::{
    extract_features, ClassScheme, DrivingStyle, FeatureSet, NormalizationStats, RecordError, Register,
};

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use mlp::{DenseLayer, Gradients, Mlp};
pub use train::{train, train_with_history, TrainConfig};

/// Hidden widths used when none are given.
pub const DEFAULT_HIDDEN: [usize; 2] = [16, 8];

#[derive(Debug, Error)]
pub enum AnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {0} has no training registers")]
    MissingClass(DrivingStyle),
    #[error("no training registers")]
    EmptyDataset,
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported model format `{found}`")]
    FormatVersionMismatch { found: String },
    #[error("model file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
}

impl Topology {
    pub fn new(input_size: usize, hidden_sizes: Vec<usize>, output_size: usize) -> Result<Self, AnnError> {
        let topo = Self { input_size, hidden_sizes, output_size };
        topo.validate()?;
        Ok(topo)
    }

    /// Input size from the feature set, output size from the scheme.
    pub fn for_task(fs: &FeatureSet, scheme: ClassScheme, hidden_sizes: &[usize]) -> Self {
        Self { input_size: fs.len(), hidden_sizes: hidden_sizes.to_vec(), output_size: scheme.n_classes() }
    }

    pub fn validate(&self) -> Result<(), AnnError> {
        if self.input_size == 0 {
            return Err(AnnError::InvalidTopology("input size must be positive".into()));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(AnnError::InvalidTopology("hidden layer widths must be positive".into()));
        }
        if self.output_size < 2 {
            return Err(AnnError::InvalidTopology("at least two output classes are required".into()));
        }
        Ok(())
    }

    /// Layer sizes from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(self.input_size);
        sizes.extend(&self.hidden_sizes);
        sizes.push(self.output_size);
        sizes
    }
}

/// A trained classifier: network weights plus everything needed to turn a
/// raw register into network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub mlp: Mlp,
    pub feature_set: FeatureSet,
    pub scheme: ClassScheme,
    pub normalization: NormalizationStats,
}

impl Network {
    pub fn new(
        mlp: Mlp,
        feature_set: FeatureSet,
        scheme: ClassScheme,
        normalization: NormalizationStats,
    ) -> Result<Self, AnnError> {
        let topo = mlp.topology();
        if topo.input_size != feature_set.len() || normalization.dim() != feature_set.len() {
            return Err(AnnError::DimensionMismatch { expected: feature_set.len(), got: topo.input_size });
        }
        if topo.output_size != scheme.n_classes() {
            return Err(AnnError::DimensionMismatch { expected: scheme.n_classes(), got: topo.output_size });
        }
        Ok(Self { mlp, feature_set, scheme, normalization })
    }

    pub fn topology(&self) -> Topology {
        self.mlp.topology()
    }

    /// Class probabilities for an already normalized feature vector, in
    /// the scheme's class order.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>, AnnError> {
        self.mlp.forward(features)
    }

    /// Class probabilities for a raw (unnormalized) feature vector.
    pub fn probabilities_raw(&self, raw: &[f64]) -> Result<Vec<f64>, AnnError> {
        let x = self.normalization.apply(raw)?;
        self.forward(&x)
    }

    pub fn probabilities(&self, r: &Register) -> Result<Vec<f64>, AnnError> {
        self.probabilities_raw(&extract_features(r, &self.feature_set))
    }

    /// Most probable class; exact ties go to the lowest class code.
    pub fn predict(&self, r: &Register) -> Result<DrivingStyle, AnnError> {
        let p = self.probabilities(r)?;
        Ok(self.scheme.classes()[argmax(&p)])
    }
}

/// Index of the largest value, first index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(net: &Network, r: &Register) -> Result<DrivingStyle, AnnError> {
    net.predict(r)
}
