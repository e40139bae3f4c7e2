//! Model file format.
//!
//! UTF-8 text, LF line endings, tokens separated by single spaces. Floats
//! use the shortest decimal form that parses back to the same `f64`.
//!
//! ```text
//! drivestyle-ann 1
//! feature_set <name>              e.g. gyro7, custom:velocity,fgz
//! scheme <3c|drop-con|merged>
//! topology <in> <hidden...> <out>
//! norm_min <in floats>
//! norm_max <in floats>
//! layer <outputs> <inputs>        repeated for each layer, input side first
//! w <inputs floats>               one line per output neuron
//! b <outputs floats>
//! end
//! ```

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AnnError, DenseLayer, Mlp, Network, Topology};
use crate::record::{ClassScheme, FeatureSet, NormalizationStats};

pub const MODEL_MAGIC: &str = "drivestyle-ann";
pub const MODEL_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(net: &Network, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    let topo = net.topology();
    writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
    writeln!(w, "feature_set {}", net.feature_set.name())?;
    writeln!(w, "scheme {}", net.scheme.name())?;
    let sizes: Vec<String> = topo.sizes().iter().map(ToString::to_string).collect();
    writeln!(w, "topology {}", sizes.join(" "))?;
    writeln!(w, "norm_min {}", join(&net.normalization.min))?;
    writeln!(w, "norm_max {}", join(&net.normalization.max))?;
    for layer in &net.mlp.layers {
        writeln!(w, "layer {} {}", layer.outputs, layer.inputs)?;
        for row in layer.weights.chunks_exact(layer.inputs) {
            writeln!(w, "w {}", join(row))?;
        }
        writeln!(w, "b {}", join(&layer.biases))?;
    }
    writeln!(w, "end")?;
    w.flush()
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<(), AnnError> {
    write_model(net, File::create(path)?)?;
    Ok(())
}

struct Lines<R: BufRead> {
    inner: io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, AnnError> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(AnnError::Io(io::Error::new(io::ErrorKind::UnexpectedEof, "model file is truncated"))),
        }
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<String>, AnnError> {
        let line = self.next_line()?;
        let mut tokens = line.split(' ').map(str::to_string);
        match tokens.next() {
            Some(k) if k == key => Ok(tokens.filter(|t| !t.is_empty()).collect()),
            _ => Err(self.malformed(format!("expected `{key}`"))),
        }
    }

    fn malformed(&self, reason: String) -> AnnError {
        AnnError::Malformed { line: self.number, reason }
    }

    fn floats(&mut self, key: &str, count: usize) -> Result<Vec<f64>, AnnError> {
        let tokens = self.keyed(key)?;
        if tokens.len() != count {
            return Err(self.malformed(format!("expected {count} values, found {}", tokens.len())));
        }
        tokens
            .iter()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.malformed("invalid number".into()))
    }

    fn usizes(&mut self, key: &str) -> Result<Vec<usize>, AnnError> {
        let tokens = self.keyed(key)?;
        tokens
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| self.malformed("invalid integer".into()))
    }
}

pub fn read_model<R: BufRead>(reader: R) -> Result<Network, AnnError> {
    let mut lines = Lines { inner: reader.lines(), number: 0 };
    let header = lines.next_line()?;
    if header != format!("{MODEL_MAGIC} {MODEL_VERSION}") {
        return Err(AnnError::FormatVersionMismatch { found: header });
    }

    let fs_tokens = lines.keyed("feature_set")?;
    let feature_set: FeatureSet =
        fs_tokens.first().and_then(|t| t.parse().ok()).ok_or_else(|| lines.malformed("unknown feature set".into()))?;
    let scheme: ClassScheme = lines
        .keyed("scheme")?
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.malformed("unknown class scheme".into()))?;
    let sizes = lines.usizes("topology")?;
    if sizes.len() < 2 {
        return Err(lines.malformed("topology needs input and output sizes".into()));
    }
    let topology = Topology::new(sizes[0], sizes[1..sizes.len() - 1].to_vec(), sizes[sizes.len() - 1])?;
    let min = lines.floats("norm_min", topology.input_size)?;
    let max = lines.floats("norm_max", topology.input_size)?;

    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for pair in sizes.windows(2) {
        let (inputs, outputs) = (pair[0], pair[1]);
        if lines.usizes("layer")? != [outputs, inputs] {
            return Err(lines.malformed("layer shape disagrees with topology".into()));
        }
        let mut layer = DenseLayer::zeros(inputs, outputs);
        for o in 0..outputs {
            let row = lines.floats("w", inputs)?;
            layer.weights[o * inputs..(o + 1) * inputs].copy_from_slice(&row);
        }
        layer.biases = lines.floats("b", outputs)?;
        layers.push(layer);
    }
    lines.keyed("end")?;

    let mlp = Mlp::from_layers(layers)?;
    Network::new(mlp, feature_set, scheme, NormalizationStats { min, max })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network, AnnError> {
    read_model(BufReader::new(File::open(path)?))
}
