//! Fully connected network with rectified hidden layers and a softmax head,
//! trained with cross-entropy.

use rand::Rng;

use crate::error::{Error, Result};

/// Affine layer. `weights` is `inputs x outputs`, row-major, so
/// `out[j] = bias[j] + sum_i x[i] * weights[i * outputs + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[target]`, computed without forming the softmax.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

/// Index of the largest value; the first one wins on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::InvalidParameter("layer buffer does not match its shape".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::InvalidParameter(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2);
        Self {
            layers: dims.windows(2).map(|d| Dense::zeros(d[0], d[1])).collect(),
        }
    }

    pub fn glorot<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2);
        Self {
            layers: dims.windows(2).map(|d| Dense::glorot(d[0], d[1], rng)).collect(),
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Pre-activations of every layer; hidden ones are rectified when fed on.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut input: Vec<f64> = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(&input, &mut z);
            if li + 1 < self.layers.len() {
                input = z.iter().map(|&v| v.max(0.0)).collect();
            }
            pre.push(z);
        }
        pre
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.layers[0].inputs, "input width");
        let mut buf = x.to_vec();
        let mut next = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            layer.apply(&buf, &mut next);
            if li + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut buf, &mut next);
        }
        buf
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(x, y)| cross_entropy(&self.logits(x), *y))
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy over `batch` and its gradient, laid out like the
    /// network's own layers.
    pub fn loss_and_grad(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<Dense>) {
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        let last = self.layers.len() - 1;

        for &(x, target) in batch {
            let pre = self.forward_trace(x);
            total += cross_entropy(&pre[last], target);

            let mut delta = softmax(&pre[last]);
            delta[target] -= 1.0;
            for d in delta.iter_mut() {
                *d *= scale;
            }

            for li in (0..=last).rev() {
                let layer = &self.layers[li];
                let g = &mut grads[li];
                let input: Vec<f64> = if li == 0 {
                    x.to_vec()
                } else {
                    pre[li - 1].iter().map(|&v| v.max(0.0)).collect()
                };
                for (i, &a) in input.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                    for (gw, &d) in row.iter_mut().zip(&delta) {
                        *gw += a * d;
                    }
                }
                for (gb, &d) in g.bias.iter_mut().zip(&delta) {
                    *gb += d;
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (i, p) in prev.iter_mut().enumerate() {
                        if pre[li - 1][i] <= 0.0 {
                            continue;
                        }
                        let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                        *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    }
                    delta = prev;
                }
            }
        }
        (total * scale, grads)
    }

    pub fn sgd_step(&mut self, grads: &[Dense], learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }
}
