use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{argmax, cross_entropy, softmax, Dense, Mlp};
use super::{extract_area_features, AreaFeatures, Context, ContextDataset, ContextMapping, DatasetSplit};
use crate::classes::NUM_OBJECT_CLASSES;
use crate::error::{Error, Result};
use crate::raster::LabelMap;

const MAGIC: &str = "CTXMODEL";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    /// Accuracy on the training set after the last epoch; `None` for
    /// models that were never trained.
    pub train_accuracy: Option<f64>,
}

/// 20 -> 120 -> 120 -> 5 rectifier network over area features.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    net: Mlp,
    meta: TrainingMeta,
}

impl ContextModel {
    pub const DIMS: [usize; 4] = [NUM_OBJECT_CLASSES, 120, 120, Context::COUNT];

    pub fn from_mlp(net: Mlp, meta: TrainingMeta) -> Result<Self> {
        if net.dims() != Self::DIMS {
            return Err(Error::InvalidParameter(format!(
                "context model must be {:?}, got {:?}",
                Self::DIMS,
                net.dims()
            )));
        }
        if !net.all_finite() {
            return Err(Error::InvalidParameter("context model has non-finite parameters".into()));
        }
        Ok(Self { net, meta })
    }

    /// Fresh seeded initialization, as used at the start of training.
    pub fn initialized(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            net: Mlp::glorot(&Self::DIMS, &mut rng),
            meta: TrainingMeta {
                seed,
                epochs: 0,
                train_accuracy: None,
            },
        }
    }

    pub fn zeros() -> Self {
        Self {
            net: Mlp::zeros(&Self::DIMS),
            meta: TrainingMeta {
                seed: 0,
                epochs: 0,
                train_accuracy: None,
            },
        }
    }

    /// Hand-wired model whose logit for each context is the summed area of
    /// that context's classes. Images without objects fall to `Others`.
    pub fn area_vote(mapping: &ContextMapping) -> Self {
        let mut net = Mlp::zeros(&Self::DIMS);
        let hidden = Self::DIMS[1];
        let layers = net.layers_mut();
        for i in 0..NUM_OBJECT_CLASSES {
            layers[0].weights[i * hidden + i] = 1.0;
            layers[1].weights[i * hidden + i] = 1.0;
            let ctx = mapping.context_of(i as u8 + 1);
            layers[2].weights[i * Context::COUNT + ctx.index()] = 1.0;
        }
        layers[2].bias[Context::Others.index()] = 1e-9;
        Self {
            net,
            meta: TrainingMeta {
                seed: 0,
                epochs: 0,
                train_accuracy: None,
            },
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn logits(&self, x: &AreaFeatures) -> [f64; Context::COUNT] {
        let z = self.net.logits(x.as_slice());
        let mut out = [0.0; Context::COUNT];
        out.copy_from_slice(&z);
        out
    }

    /// Softmax probabilities over the five contexts.
    pub fn forward(&self, x: &AreaFeatures) -> [f64; Context::COUNT] {
        let p = softmax(&self.logits(x));
        let mut out = [0.0; Context::COUNT];
        out.copy_from_slice(&p);
        out
    }

    pub fn predict(&self, x: &AreaFeatures) -> Context {
        Context::from_index(argmax(&self.logits(x))).expect("five outputs")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Serialized form: a header line, metadata lines, then each tensor as
    /// a `name rows cols` line followed by its rows. Floats use Rust's
    /// shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let dims = self.net.dims();
        let mut out = String::new();
        let _ = write!(out, "{MAGIC} {VERSION}");
        for d in &dims {
            let _ = write!(out, " {d}");
        }
        let _ = writeln!(out, " {}", self.meta.seed);
        let _ = writeln!(out, "activation relu");
        let _ = writeln!(out, "epochs {}", self.meta.epochs);
        match self.meta.train_accuracy {
            Some(a) => {
                let _ = writeln!(out, "train_accuracy {a}");
            }
            None => {
                let _ = writeln!(out, "train_accuracy none");
            }
        }
        for (i, layer) in self.net.layers().iter().enumerate() {
            let _ = writeln!(out, "w{} {} {}", i + 1, layer.inputs, layer.outputs);
            for row in layer.weights.chunks(layer.outputs) {
                write_row(&mut out, row);
            }
            let _ = writeln!(out, "b{} 1 {}", i + 1, layer.outputs);
            write_row(&mut out, &layer.bias);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| malformed(format!("truncated before {what}")))
        };

        let (_, header) = next("header")?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.first() != Some(&MAGIC) {
            return Err(malformed("bad magic"));
        }
        if tokens.get(1) != Some(&VERSION) {
            return Err(malformed(format!("unsupported version {:?}", tokens.get(1))));
        }
        if tokens.len() != 2 + Self::DIMS.len() + 1 {
            return Err(malformed("header must list four layer widths and a seed"));
        }
        let dims: Vec<usize> = tokens[2..6]
            .iter()
            .map(|t| t.parse().map_err(|_| malformed(format!("bad width {t:?}"))))
            .collect::<Result<_>>()?;
        if dims != Self::DIMS {
            return Err(malformed(format!("shape mismatch: {dims:?}, expected {:?}", Self::DIMS)));
        }
        let seed: u64 = tokens[6].parse().map_err(|_| malformed("bad seed"))?;

        let (_, act) = next("activation")?;
        if act.trim() != "activation relu" {
            return Err(malformed(format!("unsupported activation line {act:?}")));
        }
        let (_, ep) = next("epochs")?;
        let epochs = ep
            .strip_prefix("epochs ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| malformed("bad epochs line"))?;
        let (_, acc) = next("train_accuracy")?;
        let acc = acc
            .strip_prefix("train_accuracy ")
            .ok_or_else(|| malformed("bad train_accuracy line"))?
            .trim();
        let train_accuracy = match acc {
            "none" => None,
            v => Some(parse_finite(v)?),
        };

        let mut layers = Vec::new();
        for (li, pair) in Self::DIMS.windows(2).enumerate() {
            let (inputs, outputs) = (pair[0], pair[1]);
            let weights = read_tensor(&mut next, &format!("w{}", li + 1), inputs, outputs)?;
            let bias = read_tensor(&mut next, &format!("b{}", li + 1), 1, outputs)?;
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                bias,
            });
        }
        let (_, end) = next("end marker")?;
        if end.trim() != "end" {
            return Err(malformed("missing end marker"));
        }

        let net = Mlp::new(layers).map_err(|e| malformed(e.to_string()))?;
        Ok(Self {
            net,
            meta: TrainingMeta {
                seed,
                epochs,
                train_accuracy,
            },
        })
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedModelFile(msg.into())
}

fn write_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

fn parse_finite(token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| malformed(format!("bad number {token:?}")))?;
    if !v.is_finite() {
        return Err(malformed(format!("non-finite value {token:?}")));
    }
    Ok(v)
}

fn read_tensor<'a, F>(next: &mut F, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>>
where
    F: FnMut(&str) -> Result<(usize, &'a str)>,
{
    let (_, head) = next(name)?;
    let expected = format!("{name} {rows} {cols}");
    if head.trim() != expected {
        return Err(malformed(format!("expected section {expected:?}, found {head:?}")));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line_no, line) = next(name)?;
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(parse_finite(tok)?);
        }
        if values.len() - before != cols {
            return Err(malformed(format!(
                "line {}: {name} row has {} values, expected {cols}",
                line_no + 1,
                values.len() - before
            )));
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be > 0".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("epochs and batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Full-pass statistics on the training set after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; Context::COUNT]; Context::COUNT],
}

impl Evaluation {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

pub fn evaluate(model: &ContextModel, dataset: &ContextDataset) -> Evaluation {
    let mut confusion = [[0usize; Context::COUNT]; Context::COUNT];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, truth) in dataset.samples() {
        let z = model.logits(x);
        loss += cross_entropy(&z, truth.index());
        let pred = argmax(&z);
        confusion[truth.index()][pred] += 1;
        if pred == truth.index() {
            correct += 1;
        }
    }
    let n = dataset.len() as f64;
    Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
        confusion,
    }
}

/// Mini-batch SGD on mean cross-entropy. Initialization and the per-epoch
/// shuffles all come from one ChaCha8 stream seeded with `params.seed`.
pub fn train(dataset: &ContextDataset, params: &TrainParams) -> Result<(ContextModel, Vec<EpochStats>)> {
    train_with_progress(dataset, params, |_| {})
}

pub fn train_with_progress(
    dataset: &ContextDataset,
    params: &TrainParams,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ContextModel, Vec<EpochStats>)> {
    params.validate()?;
    if dataset.split() != DatasetSplit::Train {
        return Err(Error::InvalidParameter("training requires a train-split dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut net = Mlp::glorot(&ContextModel::DIMS, &mut rng);
    let samples: Vec<(&[f64], usize)> = dataset
        .samples()
        .iter()
        .map(|(x, c)| (x.as_slice(), c.index()))
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(params.epochs);
    let mut batch = Vec::with_capacity(params.batch_size);

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            let (loss, grads) = net.loss_and_grad(&batch);
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            net.sgd_step(&grads, params.learning_rate);
        }
        if !net.all_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        let snapshot = ContextModel {
            net,
            meta: TrainingMeta {
                seed: params.seed,
                epochs: epoch,
                train_accuracy: None,
            },
        };
        let eval = evaluate(&snapshot, dataset);
        net = snapshot.net;
        if !eval.loss.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        let stats = EpochStats {
            epoch,
            loss: eval.loss,
            accuracy: eval.accuracy,
        };
        on_epoch(&stats);
        history.push(stats);
    }

    let model = ContextModel {
        net,
        meta: TrainingMeta {
            seed: params.seed,
            epochs: params.epochs,
            train_accuracy: history.last().map(|s| s.accuracy),
        },
    };
    Ok((model, history))
}

pub fn classify(model: &ContextModel, labels: &LabelMap) -> Result<Context> {
    Ok(model.predict(&extract_area_features(labels)?))
}
