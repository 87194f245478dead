use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Component, MinMaxScaler};

/// Hidden-layer widths are `HIDDEN1_FACTOR * t` and `HIDDEN2_FACTOR * t`.
pub const HIDDEN1_FACTOR: usize = 10;
pub const HIDDEN2_FACTOR: usize = 5;
pub const DEFAULT_LAGS: usize = 5;
pub const DEFAULT_DROPOUT: f64 = 0.2;

/// Dense layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Uniform in `+-sqrt(6 / fan_in)`, zero biases.
    fn he_uniform(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect(),
            biases: vec![0.0; outputs],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Optimizer {
    Adam,
    Sgd,
}

/// How a model was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub final_loss: f64,
}

/// Feed-forward regressor `t -> 10t -> 5t -> 1` with ReLU hidden layers,
/// dropout after each hidden layer and a linear output, operating on
/// min-max scaled prices of one OHLC component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub lags: usize,
    pub layers: Vec<Layer>,
    pub dropout: f64,
    pub scaler: MinMaxScaler,
    pub component: Component,
    pub meta: Option<TrainingMeta>,
}

/// Layer widths for `lags` inputs.
pub fn geometry(lags: usize) -> [usize; 4] {
    [lags, HIDDEN1_FACTOR * lags, HIDDEN2_FACTOR * lags, 1]
}

impl MlpModel {
    /// Randomly initialized network.
    pub fn new(lags: usize, dropout: f64, scaler: MinMaxScaler, component: Component, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(lags, dropout, scaler, component, |i, o| Layer::he_uniform(i, o, &mut rng))
    }

    /// Network with every weight and bias zero.
    pub fn zeros(lags: usize, dropout: f64, scaler: MinMaxScaler, component: Component) -> Result<Self> {
        Self::build(lags, dropout, scaler, component, Layer::zeros)
    }

    fn build(lags: usize, dropout: f64, scaler: MinMaxScaler, component: Component, mut make: impl FnMut(usize, usize) -> Layer) -> Result<Self> {
        if lags == 0 {
            return Err(Error::Argument("network needs at least one lag".into()));
        }
        let widths = geometry(lags);
        let layers = widths.windows(2).map(|w| make(w[0], w[1])).collect();
        let model = Self {
            lags,
            layers,
            dropout,
            scaler,
            component,
            meta: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        MinMaxScaler::new(self.scaler.min, self.scaler.max)?;
        if self.layers.len() != 3 {
            return Err(Error::Shape {
                expected: 3,
                got: self.layers.len(),
            });
        }
        let expected = geometry(self.lags);
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.inputs != expected[i] || layer.outputs != expected[i + 1] {
                return Err(Error::Shape {
                    expected: expected[i + 1],
                    got: layer.outputs,
                });
            }
            if layer.weights.len() != layer.inputs * layer.outputs || layer.biases.len() != layer.outputs {
                return Err(Error::Shape {
                    expected: layer.inputs * layer.outputs,
                    got: layer.weights.len(),
                });
            }
        }
        Ok(())
    }

    /// All parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// Eval-mode prediction on raw prices: scales the lags, runs the network
    /// and maps the output back to price units.
    pub fn predict_price(&self, lags: &[f64]) -> Result<f64> {
        let scaled = self.scaler.transform(lags);
        Ok(self.scaler.inverse_one(mlp_forward(self, &scaled, false, 0)?))
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct Trace {
    pub input: Vec<f64>,
    pub pre: [Vec<f64>; 2],
    /// Post-ReLU, post-dropout hidden activations.
    pub hidden: [Vec<f64>; 2],
    /// Dropout multipliers (`0` or `1 / (1 - rate)`), all ones in eval mode.
    pub masks: [Vec<f64>; 2],
    pub output: f64,
}

pub(crate) fn forward_trace(model: &MlpModel, input: &[f64], mut rng: Option<&mut ChaCha8Rng>) -> Result<Trace> {
    if input.len() != model.lags {
        return Err(Error::Shape {
            expected: model.lags,
            got: input.len(),
        });
    }
    let keep = 1.0 - model.dropout;
    let mask = |n: usize, rng: &mut Option<&mut ChaCha8Rng>| -> Vec<f64> {
        match rng {
            Some(r) if model.dropout > 0.0 => (0..n).map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect(),
            _ => vec![1.0; n],
        }
    };
    let pre1 = model.layers[0].apply(input);
    let m1 = mask(pre1.len(), &mut rng);
    let h1: Vec<f64> = pre1.iter().zip(&m1).map(|(z, m)| z.max(0.0) * m).collect();
    let pre2 = model.layers[1].apply(&h1);
    let m2 = mask(pre2.len(), &mut rng);
    let h2: Vec<f64> = pre2.iter().zip(&m2).map(|(z, m)| z.max(0.0) * m).collect();
    let output = model.layers[2].apply(&h2)[0];
    Ok(Trace {
        input: input.to_vec(),
        pre: [pre1, pre2],
        hidden: [h1, h2],
        masks: [m1, m2],
        output,
    })
}

/// One forward pass on a scaled input. In train mode dropout masks are drawn
/// from a generator seeded with `seed`; eval mode ignores the seed.
pub fn mlp_forward(model: &MlpModel, input: &[f64], train_mode: bool, seed: u64) -> Result<f64> {
    if train_mode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(forward_trace(model, input, Some(&mut rng))?.output)
    } else {
        Ok(forward_trace(model, input, None)?.output)
    }
}

/// Mean absolute error over `pairs` and its gradient with respect to
/// [`MlpModel::params`]. Dropout is applied only when `rng` is given.
pub fn loss_and_gradient(model: &MlpModel, pairs: &[(Vec<f64>, f64)], mut rng: Option<&mut ChaCha8Rng>) -> Result<(f64, Vec<f64>)> {
    let mut grads: Vec<Layer> = model.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let scale = 1.0 / pairs.len() as f64;
    let mut loss = 0.0;
    for (x, y) in pairs {
        let trace = forward_trace(model, x, rng.as_deref_mut())?;
        let residual = trace.output - y;
        loss += residual.abs() * scale;
        let d_out = residual.signum() * scale * f64::from(residual != 0.0);
        backprop(model, &trace, d_out, &mut grads);
    }
    let mut flat = Vec::with_capacity(model.param_count());
    for g in &grads {
        flat.extend_from_slice(&g.weights);
        flat.extend_from_slice(&g.biases);
    }
    Ok((loss, flat))
}

fn accumulate(grad: &mut Layer, delta: &[f64], input: &[f64]) {
    for (o, d) in delta.iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        grad.biases[o] += d;
        let row = &mut grad.weights[o * grad.inputs..(o + 1) * grad.inputs];
        for (w, x) in row.iter_mut().zip(input) {
            *w += d * x;
        }
    }
}

fn back_through(layer: &Layer, delta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.inputs];
    for (o, d) in delta.iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
        for (acc, w) in out.iter_mut().zip(row) {
            *acc += d * w;
        }
    }
    out
}

fn backprop(model: &MlpModel, trace: &Trace, d_out: f64, grads: &mut [Layer]) {
    if d_out == 0.0 {
        return;
    }
    let delta3 = [d_out];
    accumulate(&mut grads[2], &delta3, &trace.hidden[1]);
    let d_h2 = back_through(&model.layers[2], &delta3);
    let delta2: Vec<f64> = d_h2
        .iter()
        .zip(&trace.pre[1])
        .zip(&trace.masks[1])
        .map(|((g, z), m)| if *z > 0.0 { g * m } else { 0.0 })
        .collect();
    accumulate(&mut grads[1], &delta2, &trace.hidden[0]);
    let d_h1 = back_through(&model.layers[1], &delta2);
    let delta1: Vec<f64> = d_h1
        .iter()
        .zip(&trace.pre[0])
        .zip(&trace.masks[0])
        .map(|((g, z), m)| if *z > 0.0 { g * m } else { 0.0 })
        .collect();
    accumulate(&mut grads[0], &delta1, &trace.input);
}
