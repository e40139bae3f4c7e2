//! Random-split evaluation: confusion matrices, the training-size sweep and
//! the class-scheme / feature-set variant grid.
//!
//! Every repetition draws its split and its training seed from the master
//! seed by [`derive_path`]: the split key is `[train_size, rep]` and the
//! training key is `[train_size, rep, 1]`. Feature sets evaluated at the
//! same size and repetition therefore share a split.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ann::{train, AnnError, Network, Topology, TrainConfig, DEFAULT_HIDDEN};
use crate::record::{apply_scheme, ClassScheme, Dataset, DrivingStyle, FeatureSet, Provenance, RecordError};
use crate::seed::derive_path;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("training size {n_train} must be between 1 and {len} - 1")]
    BadSize { n_train: usize, len: usize },
    #[error("label {label} is not a class of scheme {scheme}")]
    SchemeMismatch { scheme: &'static str, label: DrivingStyle },
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Seeded uniform shuffle; the first `n_train` registers train, the rest
/// validate.
pub fn random_split(data: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset), EvalError> {
    if n_train == 0 || n_train >= data.len() {
        return Err(EvalError::BadSize { n_train, len: data.len() });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize], part: &str| {
        Dataset::new(
            idx.iter().map(|&i| data.registers[i]).collect(),
            Provenance::Derived(format!("{part} split of {} (seed {seed})", data.len())),
        )
    };
    Ok((pick(&order[..n_train], "train"), pick(&order[n_train..], "validation")))
}

/// Counts of true class (rows) against predicted class (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<DrivingStyle>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<DrivingStyle>) -> Self {
        let k = classes.len();
        Self { classes, counts: vec![vec![0; k]; k] }
    }

    /// Panics if `counts` is not square with one row per class.
    pub fn from_counts(classes: Vec<DrivingStyle>, counts: Vec<Vec<u64>>) -> Self {
        assert_eq!(counts.len(), classes.len(), "one row per class");
        assert!(counts.iter().all(|row| row.len() == classes.len()), "square matrix");
        Self { classes, counts }
    }

    fn index(&self, style: DrivingStyle) -> Option<usize> {
        self.classes.iter().position(|&c| c == style)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    /// Fraction of registers on the diagonal; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * self.accuracy()
    }

    /// Cell as a percentage of its true-class row.
    pub fn row_percentage(&self, row: usize, col: usize) -> f64 {
        match self.row_total(row) {
            0 => 0.0,
            t => 100.0 * self.counts[row][col] as f64 / t as f64,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true,predicted,count,row_pct\n");
        for (i, t) in self.classes.iter().enumerate() {
            for (j, p) in self.classes.iter().enumerate() {
                out += &format!("{},{},{},{:.2}\n", t.tag(), p.tag(), self.counts[i][j], self.row_percentage(i, j));
            }
        }
        out
    }
}

/// Layout: one row per true class, `count (pct%)` per predicted
/// class, row size, then the overall accuracy.
impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const W: usize = 16;
        write!(f, "{:<8}", "")?;
        for c in &self.classes {
            write!(f, "{:>W$}", c.tag())?;
        }
        writeln!(f, "{:>8}", "size")?;
        for (i, t) in self.classes.iter().enumerate() {
            write!(f, "{:<8}", t.tag())?;
            for j in 0..self.classes.len() {
                let cell = format!("{} ({:.2}%)", self.counts[i][j], self.row_percentage(i, j));
                write!(f, "{cell:>W$}")?;
            }
            writeln!(f, "{:>8}", self.row_total(i))?;
        }
        write!(f, "accuracy {:.2}% ({}/{})", self.accuracy_pct(), self.correct(), self.total())
    }
}

/// Confusion matrix of `net` on `data`. Labels must already be in the
/// network's class scheme (see [`apply_scheme`]).
pub fn confusion(net: &Network, data: &Dataset) -> Result<ConfusionMatrix, EvalError> {
    data.require_labeled()?;
    let mut cm = ConfusionMatrix::new(net.scheme.classes().to_vec());
    for r in &data.registers {
        let label = r.label.expect("labeled");
        let row = cm.index(label).ok_or(EvalError::SchemeMismatch { scheme: net.scheme.name(), label })?;
        let col = cm.index(net.predict(r)?).expect("prediction within scheme");
        cm.counts[row][col] += 1;
    }
    Ok(cm)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One trained and evaluated repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub feature_set: FeatureSet,
    pub scheme: ClassScheme,
    pub train_size: usize,
    pub rep: usize,
    /// Percent.
    pub train_acc: f64,
    /// Percent.
    pub val_acc: f64,
}

pub const CELL_CSV_HEADER: &str = "feature_set,scheme,train_size,rep,train_acc,val_acc";

/// Cells of a sweep or variant grid in evaluation order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellTable {
    pub cells: Vec<Cell>,
}

impl CellTable {
    fn select<'a>(
        &'a self,
        fs: &'a FeatureSet,
        scheme: ClassScheme,
        size: Option<usize>,
    ) -> impl Iterator<Item = &'a Cell> {
        self.cells
            .iter()
            .filter(move |c| &c.feature_set == fs && c.scheme == scheme && size.is_none_or(|s| c.train_size == s))
    }

    /// Mean and sample std of validation accuracy for one grid point.
    pub fn val_stats(&self, fs: &FeatureSet, scheme: ClassScheme, size: Option<usize>) -> (f64, f64) {
        mean_std(&self.select(fs, scheme, size).map(|c| c.val_acc).collect::<Vec<_>>())
    }

    pub fn train_stats(&self, fs: &FeatureSet, scheme: ClassScheme, size: Option<usize>) -> (f64, f64) {
        mean_std(&self.select(fs, scheme, size).map(|c| c.train_acc).collect::<Vec<_>>())
    }

    /// Distinct (feature set, scheme, size) triples in first-seen order.
    pub fn groups(&self) -> Vec<(FeatureSet, ClassScheme, usize)> {
        let mut out: Vec<(FeatureSet, ClassScheme, usize)> = Vec::new();
        for c in &self.cells {
            let key = (c.feature_set.clone(), c.scheme, c.train_size);
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CELL_CSV_HEADER}\n");
        for c in &self.cells {
            out += &format!(
                "{},{},{},{},{:.4},{:.4}\n",
                c.feature_set.name(),
                c.scheme.name(),
                c.train_size,
                c.rep,
                c.train_acc,
                c.val_acc
            );
        }
        out
    }
}

/// Aligned summary: one line per grid point with means and sample stds.
impl fmt::Display for CellTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:<9} {:>6} {:>4} {:>16} {:>16}",
            "feature_set", "scheme", "size", "reps", "train_acc", "val_acc"
        )?;
        for (fs, scheme, size) in self.groups() {
            let reps = self.select(&fs, scheme, Some(size)).count();
            let (tm, ts) = self.train_stats(&fs, scheme, Some(size));
            let (vm, vs) = self.val_stats(&fs, scheme, Some(size));
            writeln!(
                f,
                "{:<28} {:<9} {:>6} {:>4} {:>16} {:>16}",
                fs.name(),
                scheme.name(),
                size,
                reps,
                format!("{tm:.2} ± {ts:.2}"),
                format!("{vm:.2} ± {vs:.2}")
            )?;
        }
        Ok(())
    }
}

/// Training settings shared by every cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub reps: usize,
    pub hidden: Vec<usize>,
    /// The seed field is ignored; each cell derives its own.
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            reps: 10,
            hidden: DEFAULT_HIDDEN.to_vec(),
            train: TrainConfig { epochs: EXPERIMENT_EPOCHS, ..TrainConfig::default() },
        }
    }
}

/// Epochs per cell in experiments. Longer than the bare training default:
/// the experiments compare converged networks.
pub const EXPERIMENT_EPOCHS: usize = 400;

pub const SWEEP_SIZES: [usize; 5] = [500, 1500, 2500, 3500, 4500];
pub const VARIANT_TRAIN_SIZE: usize = 4500;

/// Split, train and score one cell. The split is made on the three-class
/// data and the scheme is then applied to both halves, so every scheme sees
/// the same registers.
fn run_cell(
    data: &Dataset,
    fs: &FeatureSet,
    scheme: ClassScheme,
    size: usize,
    rep: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Cell, EvalError> {
    let (tr, va) = random_split(data, size, derive_path(seed, &[size as u64, rep as u64]))?;
    let (tr, va) = (apply_scheme(&tr, scheme)?, apply_scheme(&va, scheme)?);
    let topo = Topology::for_task(fs, scheme, &cfg.hidden);
    let train_cfg = cfg.train.clone().with_seed(derive_path(seed, &[size as u64, rep as u64, 1]));
    let net = train(&tr, fs, scheme, &topo, &train_cfg)?;
    Ok(Cell {
        feature_set: fs.clone(),
        scheme,
        train_size: size,
        rep,
        train_acc: confusion(&net, &tr)?.accuracy_pct(),
        val_acc: confusion(&net, &va)?.accuracy_pct(),
    })
}

/// Training-size sweep: every (feature set, size, repetition) gets a fresh
/// split and a fresh network.
pub fn run_sweep(
    data: &Dataset,
    feature_sets: &[FeatureSet],
    sizes: &[usize],
    scheme: ClassScheme,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<CellTable, EvalError> {
    data.require_labeled()?;
    if let Some(&n_train) = sizes.iter().find(|&&s| s == 0 || s >= data.len()) {
        return Err(EvalError::BadSize { n_train, len: data.len() });
    }
    let mut cells = Vec::with_capacity(feature_sets.len() * sizes.len() * cfg.reps);
    for fs in feature_sets {
        for &size in sizes {
            for rep in 0..cfg.reps {
                cells.push(run_cell(data, fs, scheme, size, rep, cfg, seed)?);
            }
        }
    }
    Ok(CellTable { cells })
}

pub const VARIANT_SCHEMES: [ClassScheme; 3] =
    [ClassScheme::ThreeClass, ClassScheme::TwoClassDropCon, ClassScheme::TwoClassMerged];

/// The scheme × feature-set grid at a fixed training size.
pub fn run_variants(
    data: &Dataset,
    feature_sets: &[FeatureSet],
    train_size: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<CellTable, EvalError> {
    data.require_labeled()?;
    if train_size == 0 || train_size >= data.len() {
        return Err(EvalError::BadSize { n_train: train_size, len: data.len() });
    }
    let mut cells = Vec::new();
    for fs in feature_sets {
        for scheme in VARIANT_SCHEMES {
            for rep in 0..cfg.reps {
                cells.push(run_cell(data, fs, scheme, train_size, rep, cfg, seed)?);
            }
        }
    }
    Ok(CellTable { cells })
}
